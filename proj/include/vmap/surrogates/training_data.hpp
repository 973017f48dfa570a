#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "vmap/dataspace.hpp"
#include "vmap/types.hpp"

namespace vmap {

/// Design matrix (one row per observation, four encoded columns) and
/// transformed responses, plus scheduler levels for the categorical GP.
struct TrainingData {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  std::vector<int> io_level;
  std::vector<int> vm_level;

  Eigen::Index size() const { return x.rows(); }
};

inline Eigen::VectorXd to_vector(const ContinuousPoint& p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(kDims));
  for (std::size_t k = 0; k < kDims; ++k) v[static_cast<Eigen::Index>(k)] = p[k];
  return v;
}

inline TrainingData make_training_data(std::span<const VariabilityObservation> observations,
                                       Response response, ResponseScale scale) {
  TrainingData data;
  const auto n = static_cast<Eigen::Index>(observations.size());
  data.x.resize(n, static_cast<Eigen::Index>(kDims));
  data.y.resize(n);
  data.io_level.resize(observations.size());
  data.vm_level.resize(observations.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = observations[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < kDims; ++k) data.x(i, static_cast<Eigen::Index>(k)) = o.point[k];
    data.y[i] = transform_response(response_of(o, response), scale);
    data.io_level[static_cast<std::size_t>(i)] = static_cast<int>(o.config.io_scheduler);
    data.vm_level[static_cast<std::size_t>(i)] = static_cast<int>(o.config.vm_io_scheduler);
  }
  return data;
}

}  // namespace vmap
