#include <algorithm>
#include <numeric>
#include <random>

#include "socrat/core.hpp"
#include "socrat/error.hpp"
#include "socrat/partition.hpp"

namespace socrat {

namespace {

// Random labels for one side with every subset size inside [lo, hi].
std::vector<std::size_t> random_side(std::size_t size, std::size_t K, std::size_t lo,
                                     std::size_t hi, std::mt19937_64& rng) {
  std::vector<std::size_t> nodes(size);
  std::iota(nodes.begin(), nodes.end(), std::size_t{0});
  std::shuffle(nodes.begin(), nodes.end(), rng);
  std::vector<std::size_t> labels(size, 0);
  std::vector<std::size_t> fill(K, 0);
  std::size_t next = 0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t c = 0; c < lo; ++c) labels[nodes[next++]] = k;
    fill[k] = lo;
  }
  for (; next < size; ++next) {
    std::vector<std::size_t> open;
    for (std::size_t k = 0; k < K; ++k) {
      if (fill[k] < hi) open.push_back(k);
    }
    std::uniform_int_distribution<std::size_t> pick(0, open.size() - 1);
    const std::size_t k = open[pick(rng)];
    labels[nodes[next]] = k;
    ++fill[k];
  }
  return labels;
}

class Descent {
 public:
  Descent(const DependencyGraph& graph, const PartitionConfig& cfg)
      : graph_(graph), cfg_(cfg), n_(static_cast<std::size_t>(graph.rows())),
        m_(static_cast<std::size_t>(graph.cols())) {}

  double cost(const std::vector<std::size_t>& u, const std::vector<std::size_t>& v) const {
    CrossMatrix cross(graph_.rows(), graph_.cols());
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = 0; j < m_; ++j) {
        cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = u[i] != v[j];
      }
    }
    return robust_cut_cost(cross, graph_.theta, graph_.theta_hat, cfg_.gamma);
  }

  // First-improvement descent; accepts only strict decreases.
  double improve(std::vector<std::size_t>& u, std::vector<std::size_t>& v) const {
    double current = cost(u, v);
    const double eps = 1e-12 * (1.0 + std::abs(current));
    bool improved = true;
    while (improved) {
      improved = false;
      for (int side = 0; side < 2; ++side) {
        auto& labels = side == 0 ? u : v;
        const std::size_t lo = side == 0 ? cfg_.cu_min : cfg_.cv_min;
        const std::size_t hi = side == 0 ? cfg_.cu_max : cfg_.cv_max;
        std::vector<std::size_t> size(cfg_.K, 0);
        for (auto k : labels) ++size[k];

        for (std::size_t a = 0; a < labels.size(); ++a) {
          const std::size_t from = labels[a];
          for (std::size_t to = 0; to < cfg_.K; ++to) {
            if (to == from || size[from] <= lo || size[to] >= hi) continue;
            labels[a] = to;
            const double c = cost(u, v);
            if (c < current - eps) {
              current = c;
              --size[from];
              ++size[to];
              improved = true;
              break;
            }
            labels[a] = from;
          }
        }
        for (std::size_t a = 0; a < labels.size(); ++a) {
          for (std::size_t b = a + 1; b < labels.size(); ++b) {
            if (labels[a] == labels[b]) continue;
            std::swap(labels[a], labels[b]);
            const double c = cost(u, v);
            if (c < current - eps) {
              current = c;
              improved = true;
            } else {
              std::swap(labels[a], labels[b]);
            }
          }
        }
      }
    }
    return current;
  }

 private:
  const DependencyGraph& graph_;
  const PartitionConfig& cfg_;
  std::size_t n_, m_;
};

}  // namespace

Partition partition_local_search(const DependencyGraph& graph, const PartitionConfig& cfg,
                                 std::size_t restarts, std::uint64_t seed) {
  graph.validate();
  const auto n = static_cast<std::size_t>(graph.rows());
  const auto m = static_cast<std::size_t>(graph.cols());
  cfg.validate(n, m);
  restarts = std::max<std::size_t>(1, restarts);

  Descent descent(graph, cfg);
  std::vector<std::size_t> best_u, best_v;
  double best = 0.0;
  for (std::size_t r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 0x10ca1, r));
    auto u = random_side(n, cfg.K, cfg.cu_min, cfg.cu_max, rng);
    auto v = random_side(m, cfg.K, cfg.cv_min, cfg.cv_max, rng);
    const double c = descent.improve(u, v);
    if (best_u.empty() || c < best) {
      best = c;
      best_u = std::move(u);
      best_v = std::move(v);
    }
  }
  auto [cu, cv] = canonical_labels(best_u, best_v);
  auto p = make_partition(graph, std::move(cu), std::move(cv), cfg.K, cfg.gamma,
                          SolverKind::local_search);
  p.optimal = false;
  p.nodes_explored = restarts;
  return p;
}

}  // namespace socrat
