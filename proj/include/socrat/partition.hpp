#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "socrat/graph.hpp"

namespace socrat {

// y_ij: true iff input node i and output node j sit in different subsets.
using CrossMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

// Worst-case extra cost when at most `gamma` active edges move to their upper
// interval end, given the active half-widths sorted in descending order.
template <typename Scalar>
Scalar budgeted_sum(const std::vector<Scalar>& descending, Scalar gamma) {
  if (!(gamma > Scalar(0))) return Scalar(0);
  const Scalar whole = std::floor(gamma);
  const auto full = static_cast<std::size_t>(
      std::min<Scalar>(whole, static_cast<Scalar>(descending.size())));
  Scalar total = 0;
  for (std::size_t k = 0; k < full; ++k) total += descending[k];
  const Scalar frac = gamma - whole;
  if (frac > Scalar(0) && full < descending.size()) total += frac * descending[full];
  return total;
}

// Half-widths of cut edges in J = {theta_hat > 0}, sorted descending.
template <typename DC, typename DH>
std::vector<typename DH::Scalar> active_cut_values(const Eigen::MatrixBase<DC>& cross,
                                                   const Eigen::MatrixBase<DH>& theta_hat) {
  using Scalar = typename DH::Scalar;
  std::vector<Scalar> values;
  for (Eigen::Index j = 0; j < theta_hat.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta_hat.rows(); ++i) {
      if (cross(i, j) && theta_hat(i, j) > Scalar(0)) values.push_back(theta_hat(i, j));
    }
  }
  std::sort(values.begin(), values.end(), std::greater<Scalar>());
  return values;
}

// Inner maximization of the robust cut objective, in closed form: the
// largest floor(gamma) active half-widths plus the fractional remainder of
// the next one.
template <typename DC, typename DH>
typename DH::Scalar robust_term(const Eigen::MatrixBase<DC>& cross,
                                const Eigen::MatrixBase<DH>& theta_hat,
                                typename DH::Scalar gamma) {
  return budgeted_sum(active_cut_values(cross, theta_hat), gamma);
}

// sum theta_ij y_ij + robust_term
template <typename DC, typename DT, typename DH>
typename DT::Scalar robust_cut_cost(const Eigen::MatrixBase<DC>& cross,
                                    const Eigen::MatrixBase<DT>& theta,
                                    const Eigen::MatrixBase<DH>& theta_hat,
                                    typename DT::Scalar gamma) {
  using Scalar = typename DT::Scalar;
  const Scalar deterministic = cross.template cast<Scalar>().cwiseProduct(theta).sum();
  return deterministic + robust_term(cross, theta_hat, gamma);
}

struct DualEntry {
  Eigen::Index i = 0;
  Eigen::Index j = 0;
  double value = 0.0;
};

// Multipliers of the dualized robust term: p0 >= 0 and p_ij >= 0 over J with
// p0 + p_ij >= theta_hat_ij * y_ij.
struct DualCertificate {
  double p0 = 0.0;
  std::vector<DualEntry> p;

  double objective(double gamma) const;
};

// Minimizes gamma * p0 + sum p_ij over the dual polytope, in closed form.
std::pair<double, DualCertificate> robust_term_dual(const CrossMatrix& cross,
                                                    const Eigen::MatrixXd& theta_hat,
                                                    double gamma);

// True iff every dual constraint holds exactly in floating point.
bool certificate_feasible(const DualCertificate& cert, const CrossMatrix& cross,
                          const Eigen::MatrixXd& theta_hat);

struct PartitionConfig {
  std::size_t K = 2;
  std::size_t cu_min = 1;
  std::size_t cu_max = 1;
  std::size_t cv_min = 1;
  std::size_t cv_max = 1;
  double gamma = 1.0;
  double abs_gap_tol = 1e-4;
  std::chrono::duration<double> time_limit{120.0};

  // K = max(2, ceil(min(n, m) / 3)) clamped to min(n, m); bounds
  // [1, ceil(side / K) + 1]; gamma = 1.
  static PartitionConfig defaults_for(std::size_t n, std::size_t m);
  // Throws InfeasibleBounds when no assignment can satisfy the bounds.
  void validate(std::size_t n, std::size_t m) const;
};

enum class SolverKind { exact, local_search, spectral };

const char* to_string(SolverKind kind);
SolverKind parse_solver(const std::string& name);

struct Partition {
  std::size_t K = 1;
  std::vector<std::size_t> u_assign;
  std::vector<std::size_t> v_assign;
  CrossMatrix cross;
  double cost = 0.0;
  std::optional<DualCertificate> certificate;
  SolverKind solver = SolverKind::exact;
  // Proven optimal within abs_gap_tol (exact solver without timeout).
  bool optimal = false;
  std::size_t nodes_explored = 0;
};

// Builds cross, cost and certificate for a given joint assignment.
Partition make_partition(const DependencyGraph& graph, std::vector<std::size_t> u_assign,
                         std::vector<std::size_t> v_assign, std::size_t K, double gamma,
                         SolverKind solver);

// Empty when the partition honours every assignment, cardinality and
// cross-indicator constraint and its stored cost; a description otherwise.
// Pass enforce_bounds = false for the spectral baseline.
std::string check_partition(const Partition& partition, const DependencyGraph& graph,
                            const PartitionConfig& cfg, bool enforce_bounds = true);

// Relabels subsets in order of first appearance over (u_assign, v_assign).
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> canonical_labels(
    const std::vector<std::size_t>& u_assign, const std::vector<std::size_t>& v_assign);

// Branch and bound over joint assignments minimizing the robust cut cost.
Partition partition_exact(const DependencyGraph& graph, const PartitionConfig& cfg);

// Seeded multi-start descent with single-node moves and same-side swaps.
Partition partition_local_search(const DependencyGraph& graph, const PartitionConfig& cfg,
                                 std::size_t restarts = 20, std::uint64_t seed = 0);

// Spectral co-clustering baseline; ignores cardinality bounds.
Partition cocluster_spectral(const DependencyGraph& graph, std::size_t K, double gamma = 1.0,
                             std::uint64_t seed = 0);

// Top singular triplets of A by power iteration with deflation.
struct SingularTriplets {
  Eigen::VectorXd values;
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
};
SingularTriplets top_singular_triplets(const Eigen::MatrixXd& A, Eigen::Index count,
                                       std::uint64_t seed = 0);

nlohmann::json to_json(const Partition& partition);
Partition partition_from_json(const nlohmann::json& j);

}  // namespace socrat
