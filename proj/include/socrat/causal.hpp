#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "socrat/core.hpp"
#include "socrat/graph.hpp"

namespace socrat {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Gaussian prior N(alpha * 1, (beta * I)^-1) on the regression weights.
struct RegressionPrior {
  double alpha = 0.0;
  double beta = 1.0;
};

template <typename Scalar>
struct PosteriorSummary {
  VectorX<Scalar> mean;
  VectorX<Scalar> stddev;
  bool converged = false;
  int iterations = 0;
};

namespace logistic {

template <typename Scalar>
Scalar sigmoid(Scalar z) {
  if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

// log(1 + exp(z)) without overflow.
template <typename Scalar>
Scalar softplus(Scalar z) {
  return z > Scalar(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Negative log posterior of weights `w` given design X, binary labels y and
// the prior, up to an additive constant.
template <typename DX, typename DY, typename DW>
typename DX::Scalar objective(const Eigen::MatrixBase<DX>& X, const Eigen::MatrixBase<DY>& y,
                              const Eigen::MatrixBase<DW>& w, const RegressionPrior& prior) {
  using Scalar = typename DX::Scalar;
  const VectorX<Scalar> z = X * w;
  Scalar f = 0;
  for (Eigen::Index s = 0; s < z.size(); ++s) f += softplus(z(s)) - y(s) * z(s);
  const VectorX<Scalar> d = w.array() - Scalar(prior.alpha);
  return f + Scalar(0.5) * Scalar(prior.beta) * d.squaredNorm();
}

template <typename DX, typename DY, typename DW>
VectorX<typename DX::Scalar> gradient(const Eigen::MatrixBase<DX>& X,
                                      const Eigen::MatrixBase<DY>& y,
                                      const Eigen::MatrixBase<DW>& w,
                                      const RegressionPrior& prior) {
  using Scalar = typename DX::Scalar;
  const VectorX<Scalar> z = X * w;
  VectorX<Scalar> r(z.size());
  for (Eigen::Index s = 0; s < z.size(); ++s) r(s) = sigmoid(z(s)) - y(s);
  VectorX<Scalar> g = X.transpose() * r;
  g.array() += Scalar(prior.beta) * (w.array() - Scalar(prior.alpha));
  return g;
}

template <typename DX, typename DW>
MatrixX<typename DX::Scalar> hessian(const Eigen::MatrixBase<DX>& X,
                                     const Eigen::MatrixBase<DW>& w,
                                     const RegressionPrior& prior) {
  using Scalar = typename DX::Scalar;
  const VectorX<Scalar> z = X * w;
  VectorX<Scalar> c(z.size());
  for (Eigen::Index s = 0; s < z.size(); ++s) {
    const Scalar p = sigmoid(z(s));
    c(s) = p * (Scalar(1) - p);
  }
  MatrixX<Scalar> H = X.transpose() * c.asDiagonal() * X;
  H.diagonal().array() += Scalar(prior.beta);
  return H;
}

}  // namespace logistic

// Laplace approximation to the Bayesian logistic regression posterior:
// damped Newton to the MAP (step halving whenever the objective would rise),
// covariance = inverse Hessian at the MAP. Never throws on non-convergence;
// the best iterate is returned with converged == false.
template <typename DX, typename DY>
PosteriorSummary<typename DX::Scalar> fit_token_model(const Eigen::MatrixBase<DX>& features,
                                                      const Eigen::MatrixBase<DY>& labels,
                                                      const RegressionPrior& prior,
                                                      typename DX::Scalar tol = 1e-8,
                                                      int max_iter = 100) {
  using Scalar = typename DX::Scalar;
  const Eigen::Index d = features.cols();
  PosteriorSummary<Scalar> out;
  VectorX<Scalar> w = VectorX<Scalar>::Constant(d, Scalar(prior.alpha));
  Scalar f = logistic::objective(features, labels, w, prior);
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon();

  int iter = 0;
  for (; iter <= max_iter; ++iter) {
    const VectorX<Scalar> g = logistic::gradient(features, labels, w, prior);
    if (g.size() == 0 || g.template lpNorm<Eigen::Infinity>() < tol) {
      out.converged = true;
      break;
    }
    if (iter == max_iter) break;
    const MatrixX<Scalar> H = logistic::hessian(features, w, prior);
    const VectorX<Scalar> step = H.llt().solve(g);
    Scalar t = 1;
    bool moved = false;
    for (int halvings = 0; halvings < 60; ++halvings, t *= Scalar(0.5)) {
      const VectorX<Scalar> trial = w - t * step;
      const Scalar ft = logistic::objective(features, labels, trial, prior);
      if (ft <= f + slack * (Scalar(1) + std::abs(f))) {
        w = trial;
        f = std::min(f, ft);
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.iterations = iter;
  out.mean = w;
  const MatrixX<Scalar> H = logistic::hessian(features, w, prior);
  const MatrixX<Scalar> cov = H.llt().solve(MatrixX<Scalar>::Identity(d, d));
  out.stddev = cov.diagonal().cwiseMax(Scalar(0)).cwiseSqrt();
  return out;
}

// phi_x(x_tilde): entry i is 1 iff x_tilde holds at least occurrence_rank(x_i)
// copies of x_i's surface form.
Eigen::VectorXd encode_features(const TokenSequence& x, const TokenSequence& x_tilde);

// Entry (s, j) is 1 iff y_tilde_list[s] holds at least occurrence_rank(y_j)
// copies of y_j's surface. Absent outputs give all-zero rows.
Eigen::MatrixXd encode_labels(const TokenSequence& y,
                              const std::vector<TokenSequence>& y_tilde_list);

// Design matrix over the effective sample set; row 0 is the original pair.
Eigen::MatrixXd build_feature_matrix(const PerturbationSet& pset);
Eigen::MatrixXd build_label_matrix(const PerturbationSet& pset);

struct CausalConfig {
  RegressionPrior prior;
  // theta_hat = interval_scale * posterior stddev (before normalization)
  double interval_scale = 1.0;
  double tol = 1e-8;
  int max_iter = 100;
  std::size_t workers = 1;
};

// One regression per output token; negative means are clipped to zero and the
// whole matrix (with its half-widths) is divided by its largest entry.
DependencyGraph build_dependency_graph(const PerturbationSet& pset, const CausalConfig& cfg);

}  // namespace socrat
