#pragma once

// Versioned, self-describing JSON form of fitted surrogates. Doubles are
// written in shortest round-trip form, so a save/load cycle reproduces
// predictions bit for bit.

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vmap/csv.hpp"
#include "vmap/surrogates/surrogate.hpp"

namespace vmap {

inline constexpr int kModelFormatVersion = 1;

namespace serial {

using nlohmann::json;

inline json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd to_vec(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

inline json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

inline Eigen::MatrixXd to_mat(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto row = to_vec(j[i]);
    if (row.size() != cols) throw Error("model file: ragged matrix");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline json key_json(const VariabilityMapKey& k) {
  return {{"io_mode", to_string(k.io_mode)},
          {"io_scheduler", to_string(k.io_scheduler)},
          {"vm_io_scheduler", to_string(k.vm_io_scheduler)}};
}

inline VariabilityMapKey key_from(const json& j) {
  auto mode = parse_io_mode(j.at("io_mode").get<std::string>());
  auto io = parse_scheduler(j.at("io_scheduler").get<std::string>());
  auto vm = parse_scheduler(j.at("vm_io_scheduler").get<std::string>());
  if (!mode || !io || !vm) throw Error("model file: bad map key");
  return {*mode, *io, *vm};
}

inline json spec_json(const ModelSpec& s) {
  return {{"kind", to_string(s.kind)},
          {"response_scale", to_string(s.response_scale)},
          {"mars", {{"max_order", s.mars.max_order}, {"max_bases", s.mars.max_bases}, {"gcv_penalty", s.mars.gcv_penalty}}},
          {"glm", {{"max_iter", s.glm.max_iter}, {"tol", s.glm.tol}}},
          {"cgp",
           {{"restarts", s.cgp.restarts},
            {"seed", s.cgp.seed},
            {"nugget", s.cgp.nugget},
            {"max_nugget", s.cgp.max_nugget},
            {"max_iterations", s.cgp.max_iterations}}}};
}

inline ModelSpec spec_from(const json& j) {
  ModelSpec s;
  auto kind = parse_model_kind(j.at("kind").get<std::string>());
  auto scale = parse_response_scale(j.at("response_scale").get<std::string>());
  if (!kind || !scale) throw Error("model file: bad model spec");
  s.kind = *kind;
  s.response_scale = *scale;
  if (j.contains("mars")) {
    const auto& m = j["mars"];
    s.mars.max_order = m.at("max_order").get<int>();
    s.mars.max_bases = m.at("max_bases").get<int>();
    s.mars.gcv_penalty = m.at("gcv_penalty").get<double>();
  }
  if (j.contains("glm")) {
    s.glm.max_iter = j["glm"].at("max_iter").get<int>();
    s.glm.tol = j["glm"].at("tol").get<double>();
  }
  if (j.contains("cgp")) {
    const auto& c = j["cgp"];
    s.cgp.restarts = c.at("restarts").get<int>();
    s.cgp.seed = c.at("seed").get<std::uint64_t>();
    s.cgp.nugget = c.at("nugget").get<double>();
    s.cgp.max_nugget = c.at("max_nugget").get<double>();
    s.cgp.max_iterations = c.at("max_iterations").get<int>();
  }
  s.validate();
  return s;
}

inline json mat3(const Eigen::Matrix3d& m) { return mat(Eigen::MatrixXd(m)); }

inline json model_json(const LinearModel& m) {
  return {{"intercept", m.intercept}, {"coefficients", vec(m.coefficients)}};
}
inline json model_json(const GammaGlmModel& m) {
  return {{"coefficients", vec(m.coefficients)}, {"dispersion", m.dispersion}, {"iterations", m.iterations}};
}
inline json model_json(const ShepardModel& m) {
  return {{"nodes", mat(m.nodes)},          {"values", vec(m.values)},
          {"slopes", mat(m.slopes)},        {"outer_radius", vec(m.outer_radius)},
          {"fit_radius", vec(m.fit_radius)}, {"neighbors", m.neighbors},
          {"diameter", m.diameter}};
}
inline json model_json(const MarsModel& m) {
  json bases = json::array();
  for (const auto& b : m.bases) {
    json factors = json::array();
    for (const auto& f : b.factors) factors.push_back({{"variable", f.variable}, {"knot", f.knot}, {"sign", f.sign}});
    bases.push_back({{"factors", factors}, {"pair_id", b.pair_id}});
  }
  return {{"bases", bases}, {"coefficients", vec(m.coefficients)}, {"gcv", m.gcv}};
}
inline json model_json(const CgpModel& m) {
  return {{"x", mat(m.x)},
          {"io_level", m.io_level},
          {"vm_level", m.vm_level},
          {"mu", m.mu},
          {"sigma2", m.sigma2},
          {"theta", vec(m.theta)},
          {"tau_io", mat3(m.tau_io)},
          {"tau_vm", mat3(m.tau_vm)},
          {"nugget_ratio", m.nugget_ratio},
          {"alpha", vec(m.alpha)},
          {"log_likelihood", m.log_likelihood}};
}

inline Surrogate::Model model_from(ModelKind kind, const json& j) {
  switch (kind) {
    case ModelKind::LM: {
      LinearModel m;
      m.intercept = j.at("intercept").get<double>();
      m.coefficients = to_vec(j.at("coefficients"));
      return m;
    }
    case ModelKind::GAMGLM: {
      GammaGlmModel m;
      m.coefficients = to_vec(j.at("coefficients"));
      if (m.coefficients.size() != kGammaGlmTerms) throw Error("model file: wrong GAMGLM coefficient count");
      m.dispersion = j.at("dispersion").get<double>();
      m.iterations = j.at("iterations").get<int>();
      return m;
    }
    case ModelKind::LSP: {
      ShepardModel m;
      m.nodes = to_mat(j.at("nodes"), static_cast<Eigen::Index>(kDims));
      m.values = to_vec(j.at("values"));
      m.slopes = to_mat(j.at("slopes"), static_cast<Eigen::Index>(kDims));
      m.outer_radius = to_vec(j.at("outer_radius"));
      m.fit_radius = to_vec(j.at("fit_radius"));
      m.neighbors = j.at("neighbors").get<Eigen::Index>();
      m.diameter = j.at("diameter").get<double>();
      return m;
    }
    case ModelKind::MARS: {
      MarsModel m;
      for (const auto& b : j.at("bases")) {
        MarsBasis basis;
        basis.pair_id = b.at("pair_id").get<int>();
        for (const auto& f : b.at("factors"))
          basis.factors.push_back({f.at("variable").get<int>(), f.at("knot").get<double>(), f.at("sign").get<int>()});
        m.bases.push_back(std::move(basis));
      }
      m.coefficients = to_vec(j.at("coefficients"));
      m.gcv = j.at("gcv").get<double>();
      return m;
    }
    case ModelKind::CGP: {
      CgpModel m;
      m.x = to_mat(j.at("x"), static_cast<Eigen::Index>(kDims));
      m.io_level = j.at("io_level").get<std::vector<int>>();
      m.vm_level = j.at("vm_level").get<std::vector<int>>();
      m.mu = j.at("mu").get<double>();
      m.sigma2 = j.at("sigma2").get<double>();
      m.theta = to_vec(j.at("theta"));
      m.tau_io = to_mat(j.at("tau_io"), 3);
      m.tau_vm = to_mat(j.at("tau_vm"), 3);
      m.nugget_ratio = j.at("nugget_ratio").get<double>();
      m.alpha = to_vec(j.at("alpha"));
      m.log_likelihood = j.at("log_likelihood").get<double>();
      return m;
    }
  }
  throw Error("model file: unknown kind");
}

}  // namespace serial

inline nlohmann::json to_json(const Surrogate& s) {
  return {{"format", "vmap-model"},
          {"version", kModelFormatVersion},
          {"spec", serial::spec_json(s.spec())},
          {"response", s.response() == Response::Variability ? "pvm" : "mean_throughput"},
          {"key", serial::key_json(s.key())},
          {"model", std::visit([](const auto& m) { return serial::model_json(m); }, s.model())}};
}

inline Surrogate surrogate_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "vmap-model") throw Error("not a vmap model document");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw Error("unsupported model format version " + std::to_string(version));
    const ModelSpec spec = serial::spec_from(j.at("spec"));
    const auto response = j.at("response").get<std::string>() == "pvm" ? Response::Variability : Response::MeanThroughput;
    return Surrogate(spec, response, serial::key_from(j.at("key")), serial::model_from(spec.kind, j.at("model")));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model file: ") + e.what());
  }
}

/// A set of fitted maps, as written by the `fit` command.
inline nlohmann::json bundle_to_json(const std::vector<Surrogate>& models) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : models) arr.push_back(to_json(m));
  return {{"format", "vmap-bundle"}, {"version", kModelFormatVersion}, {"models", arr}};
}

inline std::vector<Surrogate> bundle_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "vmap-bundle") throw Error("not a vmap model bundle");
    if (j.at("version").get<int>() != kModelFormatVersion) throw Error("unsupported bundle version");
    std::vector<Surrogate> out;
    for (const auto& m : j.at("models")) out.push_back(surrogate_from_json(m));
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("model bundle: ") + e.what());
  }
}

inline void save_bundle(const std::string& path, const std::vector<Surrogate>& models) {
  auto out = csv::open_output(path);
  out << bundle_to_json(models).dump(1) << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

inline std::vector<Surrogate> load_bundle(const std::string& path) {
  auto in = csv::open_input(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("model bundle '" + path + "': " + e.what());
  }
  return bundle_from_json(j);
}

}  // namespace vmap
