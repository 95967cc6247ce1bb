#pragma once

#include <Eigen/Dense>
#include <json.hpp>
#include <vector>

#include "socrat/core.hpp"

namespace socrat {

// Dense bipartite dependency graph with interval weights theta +- theta_hat.
// Rows index input-token occurrences, columns output-token occurrences.
struct DependencyGraph {
  Eigen::MatrixXd theta;
  Eigen::MatrixXd theta_hat;
  TokenSequence x_nodes;
  TokenSequence y_nodes;
  // Per output token: did its regression converge, and in how many steps.
  std::vector<bool> converged;
  std::vector<int> iterations;
  // Divisor applied to the raw posterior means (1 when all were <= 0).
  double normalizer = 1.0;

  Eigen::Index rows() const { return theta.rows(); }
  Eigen::Index cols() const { return theta.cols(); }
  void validate() const;
};

nlohmann::json to_json(const DependencyGraph& graph);
DependencyGraph graph_from_json(const nlohmann::json& j);

}  // namespace socrat
