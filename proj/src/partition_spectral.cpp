#include <cmath>
#include <limits>
#include <random>

#include "socrat/core.hpp"
#include "socrat/error.hpp"
#include "socrat/partition.hpp"

namespace socrat {

SingularTriplets top_singular_triplets(const Eigen::MatrixXd& A, Eigen::Index count,
                                       std::uint64_t seed) {
  count = std::min(count, std::min(A.rows(), A.cols()));
  SingularTriplets out;
  out.values = Eigen::VectorXd::Zero(count);
  out.left = Eigen::MatrixXd::Zero(A.rows(), count);
  out.right = Eigen::MatrixXd::Zero(A.cols(), count);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd residual = A;
  for (Eigen::Index t = 0; t < count; ++t) {
    const Eigen::MatrixXd gram = residual.transpose() * residual;
    Eigen::VectorXd v(A.cols());
    for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = normal(rng);
    // Stay orthogonal to the directions already extracted.
    for (Eigen::Index s = 0; s < t; ++s) v -= out.right.col(s).dot(v) * out.right.col(s);
    v.normalize();
    for (int iter = 0; iter < 5000; ++iter) {
      Eigen::VectorXd next = gram * v;
      for (Eigen::Index s = 0; s < t; ++s) next -= out.right.col(s).dot(next) * out.right.col(s);
      const double norm = next.norm();
      if (norm < 1e-300) break;
      next /= norm;
      const double change = (next - v).norm();
      v = next;
      if (change < 1e-13) break;
    }
    const Eigen::VectorXd av = residual * v;
    const double sigma = av.norm();
    out.values(t) = sigma;
    out.right.col(t) = v;
    if (sigma > 1e-12) out.left.col(t) = av / sigma;
    residual -= sigma * out.left.col(t) * v.transpose();
  }
  return out;
}

namespace {

// Lloyd's algorithm with k-means++ seeding; best of `restarts` by inertia.
std::vector<std::size_t> kmeans(const Eigen::MatrixXd& points, std::size_t K, std::uint64_t seed,
                                int restarts) {
  const Eigen::Index count = points.rows();
  std::vector<std::size_t> best_labels(static_cast<std::size_t>(count), 0);
  double best_inertia = std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 0x6b6d, static_cast<std::uint64_t>(r)));
    Eigen::MatrixXd centers(static_cast<Eigen::Index>(K), points.cols());
    std::uniform_int_distribution<Eigen::Index> first(0, count - 1);
    centers.row(0) = points.row(first(rng));
    for (std::size_t c = 1; c < K; ++c) {
      Eigen::VectorXd d2(count);
      for (Eigen::Index p = 0; p < count; ++p) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t q = 0; q < c; ++q) {
          nearest = std::min(nearest, (points.row(p) - centers.row(static_cast<Eigen::Index>(q))).squaredNorm());
        }
        d2(p) = nearest;
      }
      const double total = d2.sum();
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        std::uniform_real_distribution<double> unit(0.0, total);
        double target = unit(rng);
        for (chosen = 0; chosen < count - 1; ++chosen) {
          target -= d2(chosen);
          if (target <= 0.0) break;
        }
      } else {
        chosen = first(rng);
      }
      centers.row(static_cast<Eigen::Index>(c)) = points.row(chosen);
    }

    std::vector<std::size_t> labels(static_cast<std::size_t>(count), 0);
    double inertia = 0.0;
    for (int iter = 0; iter < 300; ++iter) {
      bool moved = false;
      inertia = 0.0;
      for (Eigen::Index p = 0; p < count; ++p) {
        std::size_t arg = 0;
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < K; ++c) {
          const double d = (points.row(p) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
          if (d < nearest) {
            nearest = d;
            arg = c;
          }
        }
        inertia += nearest;
        if (labels[static_cast<std::size_t>(p)] != arg) moved = true;
        labels[static_cast<std::size_t>(p)] = arg;
      }
      Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(K), points.cols());
      std::vector<std::size_t> sizes(K, 0);
      for (Eigen::Index p = 0; p < count; ++p) {
        sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(p)])) += points.row(p);
        ++sizes[labels[static_cast<std::size_t>(p)]];
      }
      for (std::size_t c = 0; c < K; ++c) {
        if (sizes[c] > 0) centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(sizes[c]);
      }
      if (!moved && iter > 0) break;
    }
    if (inertia < best_inertia - 1e-12) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

}  // namespace

Partition cocluster_spectral(const DependencyGraph& graph, std::size_t K, double gamma,
                             std::uint64_t seed) {
  graph.validate();
  const auto n = static_cast<std::size_t>(graph.rows());
  const auto m = static_cast<std::size_t>(graph.cols());
  if (K < 1 || K > std::min(n, m)) {
    throw InvalidK("K must lie in 1..min(|x|, |y|) = " + std::to_string(std::min(n, m)));
  }
  if ((graph.theta.array() < 0.0).any()) throw Error("co-clustering needs non-negative weights");

  if (K == 1) {
    return make_partition(graph, std::vector<std::size_t>(n, 0), std::vector<std::size_t>(m, 0), 1,
                          gamma, SolverKind::spectral);
  }

  Eigen::VectorXd d1 = graph.theta.rowwise().sum();
  Eigen::VectorXd d2 = graph.theta.colwise().sum().transpose();
  for (Eigen::Index i = 0; i < d1.size(); ++i) d1(i) = d1(i) > 0.0 ? 1.0 / std::sqrt(d1(i)) : 1.0;
  for (Eigen::Index j = 0; j < d2.size(); ++j) d2(j) = d2(j) > 0.0 ? 1.0 / std::sqrt(d2(j)) : 1.0;
  const Eigen::MatrixXd normalized = d1.asDiagonal() * graph.theta * d2.asDiagonal();

  const auto vectors = static_cast<Eigen::Index>(std::ceil(std::log2(static_cast<double>(K)))) + 1;
  const auto svd = top_singular_triplets(normalized, vectors, derive_seed(seed, 0x5bd));

  Eigen::MatrixXd embedding(static_cast<Eigen::Index>(n + m), svd.values.size());
  embedding.topRows(static_cast<Eigen::Index>(n)) = d1.asDiagonal() * svd.left;
  embedding.bottomRows(static_cast<Eigen::Index>(m)) = d2.asDiagonal() * svd.right;

  const auto labels = kmeans(embedding, K, seed, 10);
  std::vector<std::size_t> u(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<std::size_t> v(labels.begin() + static_cast<std::ptrdiff_t>(n), labels.end());
  auto [cu, cv] = canonical_labels(u, v);
  auto p = make_partition(graph, std::move(cu), std::move(cv), K, gamma, SolverKind::spectral);
  p.optimal = false;
  return p;
}

}  // namespace socrat
