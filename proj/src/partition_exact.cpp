#include <algorithm>
#include <limits>
#include <numeric>

#include "socrat/error.hpp"
#include "socrat/partition.hpp"

namespace socrat {

namespace {

using Clock = std::chrono::steady_clock;

// Depth-first branch and bound over joint node labellings.
//
// Nodes 0..n-1 are inputs, n..n+m-1 outputs. A node may take a label only if
// every smaller label already appeared earlier in the search order, which
// removes the K! relabelling symmetry. The bound at a search node is
//   deterministic cost of decided cut edges
// + robust term of decided cut edges
// + for every undecided node, its cheapest label against decided neighbours.
// Each edge counted in the last sum has exactly one undecided endpoint, and
// both cost parts only grow as edges are cut, so the bound is admissible.
class BranchAndBound {
 public:
  BranchAndBound(const DependencyGraph& graph, const PartitionConfig& cfg)
      : theta_(graph.theta),
        theta_hat_(graph.theta_hat),
        cfg_(cfg),
        n_(static_cast<std::size_t>(graph.rows())),
        m_(static_cast<std::size_t>(graph.cols())),
        N_(n_ + m_),
        K_(cfg.K),
        label_(N_, kUnset),
        mass_decided_(N_, 0.0),
        mass_by_label_(N_ * K_, 0.0),
        count_(2 * K_, 0) {
    std::vector<double> incident(N_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) incident[i] = theta_.row(static_cast<Eigen::Index>(i)).sum();
    for (std::size_t j = 0; j < m_; ++j) incident[n_ + j] = theta_.col(static_cast<Eigen::Index>(j)).sum();
    order_.resize(N_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return incident[a] > incident[b]; });
    remaining_[0] = n_;
    remaining_[1] = m_;
  }

  Partition solve() {
    start_ = Clock::now();
    deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(cfg_.time_limit);
    search(0, 0);
    if (best_labels_.empty()) throw InfeasibleBounds("no feasible partition found");

    std::vector<std::size_t> u(best_labels_.begin(), best_labels_.begin() + static_cast<std::ptrdiff_t>(n_));
    std::vector<std::size_t> v(best_labels_.begin() + static_cast<std::ptrdiff_t>(n_), best_labels_.end());
    Partition p;
    p.K = K_;
    p.solver = SolverKind::exact;
    p.u_assign = std::move(u);
    p.v_assign = std::move(v);
    p.cross.resize(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(m_));
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        p.cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p.u_assign[i] != p.v_assign[j];
      }
    }
    p.cost = robust_cut_cost(p.cross, theta_, theta_hat_, cfg_.gamma);
    p.certificate = robust_term_dual(p.cross, theta_hat_, cfg_.gamma).second;
    p.optimal = !timed_out_;
    p.nodes_explored = nodes_;
    return p;
  }

 private:
  static constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();

  bool is_input(std::size_t node) const { return node < n_; }

  double weight(std::size_t a, std::size_t b) const {
    return is_input(a) ? theta_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b - n_))
                       : theta_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a - n_));
  }

  double half_width(std::size_t a, std::size_t b) const {
    return is_input(a) ? theta_hat_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b - n_))
                       : theta_hat_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a - n_));
  }

  std::size_t& count(std::size_t side, std::size_t k) { return count_[side * K_ + k]; }

  double robust_of_cut() const { return budgeted_sum(cut_hat_, cfg_.gamma); }

  void insert_hat(double value) {
    const auto pos = std::lower_bound(cut_hat_.begin(), cut_hat_.end(), value, std::greater<double>());
    cut_hat_.insert(pos, value);
  }

  void erase_hat(double value) {
    const auto pos = std::lower_bound(cut_hat_.begin(), cut_hat_.end(), value, std::greater<double>());
    cut_hat_.erase(pos);
  }

  void assign(std::size_t node, std::size_t k) {
    const std::size_t side = is_input(node) ? 0 : 1;
    deterministic_ += mass_decided_[node] - mass_by_label_[node * K_ + k];
    const std::size_t first = side == 0 ? n_ : 0;
    const std::size_t last = side == 0 ? N_ : n_;
    for (std::size_t other = first; other < last; ++other) {
      const double w = weight(node, other);
      mass_decided_[other] += w;
      mass_by_label_[other * K_ + k] += w;
      if (label_[other] != kUnset && label_[other] != k) {
        const double h = half_width(node, other);
        if (h > 0.0) insert_hat(h);
      }
    }
    label_[node] = k;
    ++count(side, k);
    --remaining_[side];
  }

  void unassign(std::size_t node) {
    const std::size_t side = is_input(node) ? 0 : 1;
    const std::size_t k = label_[node];
    label_[node] = kUnset;
    --count(side, k);
    ++remaining_[side];
    const std::size_t first = side == 0 ? n_ : 0;
    const std::size_t last = side == 0 ? N_ : n_;
    for (std::size_t other = first; other < last; ++other) {
      const double w = weight(node, other);
      mass_decided_[other] -= w;
      mass_by_label_[other * K_ + k] -= w;
      if (label_[other] != kUnset && label_[other] != k) {
        const double h = half_width(node, other);
        if (h > 0.0) erase_hat(h);
      }
    }
    deterministic_ -= mass_decided_[node] - mass_by_label_[node * K_ + k];
  }

  bool counts_feasible() {
    for (std::size_t side = 0; side < 2; ++side) {
      const std::size_t lo = side == 0 ? cfg_.cu_min : cfg_.cv_min;
      const std::size_t hi = side == 0 ? cfg_.cu_max : cfg_.cv_max;
      std::size_t need = 0;
      std::size_t room = 0;
      for (std::size_t k = 0; k < K_; ++k) {
        const std::size_t c = count(side, k);
        if (c > hi) return false;
        need += c < lo ? lo - c : 0;
        room += hi - c;
      }
      if (need > remaining_[side] || room < remaining_[side]) return false;
    }
    return true;
  }

  double bound() const {
    double lookahead = 0.0;
    for (std::size_t node = 0; node < N_; ++node) {
      if (label_[node] != kUnset) continue;
      double keep = 0.0;
      for (std::size_t k = 0; k < K_; ++k) keep = std::max(keep, mass_by_label_[node * K_ + k]);
      lookahead += mass_decided_[node] - keep;
    }
    return deterministic_ + robust_of_cut() + lookahead;
  }

  bool out_of_time() {
    if (timed_out_) return true;
    // Keep searching until a first incumbent exists.
    if (best_labels_.empty()) return false;
    if ((nodes_ & 255u) == 0 && Clock::now() >= deadline_) timed_out_ = true;
    return timed_out_;
  }

  void search(std::size_t depth, std::size_t labels_used) {
    ++nodes_;
    if (out_of_time()) return;
    if (depth == N_) {
      const double cost = deterministic_ + robust_of_cut();
      if (best_labels_.empty() || cost < best_cost_ - cfg_.abs_gap_tol) {
        best_cost_ = cost;
        best_labels_ = label_;
      }
      return;
    }
    const std::size_t node = order_[depth];
    const std::size_t limit = std::min(K_, labels_used + 1);
    for (std::size_t k = 0; k < limit; ++k) {
      assign(node, k);
      if (counts_feasible() &&
          (best_labels_.empty() || bound() < best_cost_ - cfg_.abs_gap_tol)) {
        search(depth + 1, std::max(labels_used, k + 1));
      }
      unassign(node);
      if (timed_out_) return;
    }
  }

  const Eigen::MatrixXd& theta_;
  const Eigen::MatrixXd& theta_hat_;
  const PartitionConfig& cfg_;
  std::size_t n_, m_, N_, K_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> label_;
  std::vector<double> mass_decided_;
  std::vector<double> mass_by_label_;
  std::vector<std::size_t> count_;
  std::size_t remaining_[2] = {0, 0};
  std::vector<double> cut_hat_;
  double deterministic_ = 0.0;

  double best_cost_ = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> best_labels_;
  std::size_t nodes_ = 0;
  bool timed_out_ = false;
  Clock::time_point start_, deadline_;
};

}  // namespace

Partition partition_exact(const DependencyGraph& graph, const PartitionConfig& cfg) {
  graph.validate();
  cfg.validate(static_cast<std::size_t>(graph.rows()), static_cast<std::size_t>(graph.cols()));
  BranchAndBound bb(graph, cfg);
  return bb.solve();
}

}  // namespace socrat
