#pragma once

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "vmap/dataspace.hpp"
#include "vmap/surrogates/cgp.hpp"
#include "vmap/surrogates/gamma_glm.hpp"
#include "vmap/surrogates/linear.hpp"
#include "vmap/surrogates/mars.hpp"
#include "vmap/surrogates/shepard.hpp"
#include "vmap/surrogates/training_data.hpp"
#include "vmap/types.hpp"

namespace vmap {

enum class ModelKind : std::uint8_t { LM, GAMGLM, LSP, MARS, CGP };

inline constexpr std::array<ModelKind, 5> kAllModelKinds = {ModelKind::LM, ModelKind::GAMGLM, ModelKind::LSP,
                                                            ModelKind::MARS, ModelKind::CGP};

inline std::string_view to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LM: return "LM";
    case ModelKind::GAMGLM: return "GAMGLM";
    case ModelKind::LSP: return "LSP";
    case ModelKind::MARS: return "MARS";
    case ModelKind::CGP: return "CGP";
  }
  return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view text) {
  for (auto k : kAllModelKinds)
    if (detail::iequals(text, to_string(k))) return k;
  return std::nullopt;
}

/// Which family to fit, on which response scale, with its settings. Settings
/// of other families are carried but ignored.
struct ModelSpec {
  ModelKind kind = ModelKind::LSP;
  ResponseScale response_scale = ResponseScale::Log;
  MarsOptions mars;
  GlmOptions glm;
  CgpOptions cgp;

  /// One model per IO mode (spanning all scheduler levels) rather than per map.
  bool per_mode() const { return kind == ModelKind::CGP; }

  void validate() const {
    switch (kind) {
      case ModelKind::MARS:
        if (mars.max_order < 1) throw Error("MARS: max_order must be at least 1");
        if (mars.max_bases < 0) throw Error("MARS: max_bases must be at least 1 (or 0 for the default)");
        if (!(mars.gcv_penalty >= 0.0)) throw Error("MARS: gcv_penalty must be nonnegative");
        break;
      case ModelKind::GAMGLM:
        if (glm.max_iter < 1) throw Error("GAMGLM: max_iter must be positive");
        if (!(glm.tol > 0.0)) throw Error("GAMGLM: tol must be positive");
        break;
      case ModelKind::CGP:
        if (cgp.restarts < 1) throw Error("CGP: restarts must be at least 1");
        if (!(cgp.nugget > 0.0) || cgp.nugget > cgp.max_nugget)
          throw Error("CGP: nugget must be positive and not above the escalation cap");
        if (cgp.max_iterations < 0) throw Error("CGP: max_iterations must be nonnegative");
        break;
      case ModelKind::LM:
      case ModelKind::LSP: break;
    }
  }

  static ModelSpec of(ModelKind kind, ResponseScale scale = ResponseScale::Log) {
    ModelSpec s;
    s.kind = kind;
    s.response_scale = scale;
    return s;
  }
};

struct Prediction {
  double value = 0.0;
  bool fallback = false;
};

/// A fitted, immutable predictor for one variability map (or one IO mode for
/// the categorical GP). Predictions are returned on the original scale.
class Surrogate {
 public:
  using Model = std::variant<LinearModel, GammaGlmModel, ShepardModel, MarsModel, CgpModel>;

  Surrogate(ModelSpec spec, Response response, VariabilityMapKey key, Model model)
      : spec_(std::move(spec)), response_(response), key_(key), model_(std::move(model)) {}

  const ModelSpec& spec() const { return spec_; }
  Response response() const { return response_; }
  /// Map the model was trained on. For per-mode models only io_mode is meaningful.
  const VariabilityMapKey& key() const { return key_; }
  const Model& model() const { return model_; }

  bool accepts(const VariabilityMapKey& key) const {
    return spec_.per_mode() ? key.io_mode == key_.io_mode : key == key_;
  }

  Prediction predict_detailed(const ContinuousPoint& point, const VariabilityMapKey& key) const {
    if (!accepts(key))
      throw Error("model trained on " + to_string(key_) + " cannot predict for " + to_string(key));
    const Eigen::VectorXd x = to_vector(point);
    Prediction out;
    const double t = std::visit(
        [&](const auto& m) -> double {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, CgpModel>) {
            return m.predict(x, static_cast<int>(key.io_scheduler), static_cast<int>(key.vm_io_scheduler));
          } else if constexpr (std::is_same_v<M, ShepardModel>) {
            const auto p = m.predict_detailed(x);
            out.fallback = p.fallback;
            return p.value;
          } else {
            return m.predict(x);
          }
        },
        model_);
    out.value = inverse_transform_response(t, spec_.response_scale);
    return out;
  }

  double predict(const ContinuousPoint& point, const VariabilityMapKey& key) const {
    return predict_detailed(point, key).value;
  }

 private:
  ModelSpec spec_;
  Response response_;
  VariabilityMapKey key_;
  Model model_;
};

/// Fits one surrogate. Per-map kinds need observations from a single map;
/// the categorical GP needs a single IO mode.
inline Surrogate fit(const ModelSpec& spec, std::span<const VariabilityObservation> observations,
                     Response response = Response::Variability) {
  spec.validate();
  if (observations.empty()) throw Error(std::string(to_string(spec.kind)) + ": no training data");
  const VariabilityMapKey key = observations.front().key();
  for (const auto& o : observations) {
    const bool same = spec.per_mode() ? o.config.io_mode == key.io_mode : o.key() == key;
    if (!same)
      throw Error(std::string(to_string(spec.kind)) + ": training data mixes " + to_string(key) + " and " +
                  to_string(o.key()));
  }
  const TrainingData data = make_training_data(observations, response, spec.response_scale);
  auto wrap = [&](auto&& m) { return Surrogate(spec, response, key, std::forward<decltype(m)>(m)); };
  switch (spec.kind) {
    case ModelKind::LM: return wrap(fit_linear(data.x, data.y));
    case ModelKind::GAMGLM: return wrap(fit_gamma_glm(data.x, data.y, spec.glm));
    case ModelKind::LSP: return wrap(fit_shepard(data.x, data.y));
    case ModelKind::MARS: return wrap(fit_mars(data.x, data.y, spec.mars));
    case ModelKind::CGP: return wrap(fit_cgp(data.x, data.y, data.io_level, data.vm_level, spec.cgp));
  }
  throw Error("unknown model kind");
}

/// Mean-throughput surface m(x) for the optimizer's constraint.
inline Surrogate fit_performance_surface(const ModelSpec& spec,
                                         std::span<const VariabilityObservation> observations) {
  return fit(spec, observations, Response::MeanThroughput);
}

/// Training observations for the model that serves `key`.
inline std::vector<VariabilityObservation> training_group(const ModelSpec& spec,
                                                          const std::vector<VariabilityObservation>& observations,
                                                          const VariabilityMapKey& key) {
  std::vector<VariabilityObservation> out;
  for (const auto& o : observations)
    if (spec.per_mode() ? o.config.io_mode == key.io_mode : o.key() == key) out.push_back(o);
  return out;
}

}  // namespace vmap
