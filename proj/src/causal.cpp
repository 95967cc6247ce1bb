#include "socrat/causal.hpp"

#include "socrat/error.hpp"
#include "socrat/parallel.hpp"

namespace socrat {

namespace {

void encode_row(const TokenSequence& reference, const TokenSequence& observed,
                Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> row) {
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const auto& tok = reference[i];
    row(static_cast<Eigen::Index>(i)) =
        observed.count(tok.surface) >= tok.occurrence_rank ? 1.0 : 0.0;
  }
}

}  // namespace

Eigen::VectorXd encode_features(const TokenSequence& x, const TokenSequence& x_tilde) {
  if (x.empty()) throw EmptySequence();
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(x.size()));
  encode_row(x, x_tilde, row);
  return row.transpose();
}

Eigen::MatrixXd encode_labels(const TokenSequence& y,
                              const std::vector<TokenSequence>& y_tilde_list) {
  if (y.empty()) throw EmptySequence();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(y_tilde_list.size()),
                      static_cast<Eigen::Index>(y.size()));
  for (std::size_t s = 0; s < y_tilde_list.size(); ++s) {
    encode_row(y, y_tilde_list[s], out.row(static_cast<Eigen::Index>(s)));
  }
  return out;
}

Eigen::MatrixXd build_feature_matrix(const PerturbationSet& pset) {
  const auto& x = pset.original.x;
  if (x.empty()) throw EmptySequence();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pset.effective_size()),
                    static_cast<Eigen::Index>(x.size()));
  encode_row(x, x, X.row(0));
  for (std::size_t s = 0; s < pset.samples.size(); ++s) {
    encode_row(x, pset.samples[s].x, X.row(static_cast<Eigen::Index>(s + 1)));
  }
  return X;
}

Eigen::MatrixXd build_label_matrix(const PerturbationSet& pset) {
  std::vector<TokenSequence> outputs;
  outputs.reserve(pset.effective_size());
  outputs.push_back(pset.original.y);
  for (const auto& s : pset.samples) outputs.push_back(s.y);
  return encode_labels(pset.original.y, outputs);
}

DependencyGraph build_dependency_graph(const PerturbationSet& pset, const CausalConfig& cfg) {
  if (!(cfg.prior.beta > 0.0)) throw Error("prior beta must be positive");
  if (!(cfg.tol > 0.0)) throw Error("tolerance must be positive");
  if (cfg.interval_scale < 0.0) throw Error("interval scale must be non-negative");

  const Eigen::MatrixXd X = build_feature_matrix(pset);
  const Eigen::MatrixXd Y = build_label_matrix(pset);
  const Eigen::Index n = X.cols();
  const Eigen::Index m = Y.cols();

  std::vector<PosteriorSummary<double>> fits(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), cfg.workers, [&](std::size_t j) {
    fits[j] = fit_token_model(X, Y.col(static_cast<Eigen::Index>(j)), cfg.prior, cfg.tol,
                              cfg.max_iter);
  });

  DependencyGraph g;
  g.x_nodes = pset.original.x.with_side(Side::input);
  g.y_nodes = pset.original.y.with_side(Side::output);
  g.theta.resize(n, m);
  g.theta_hat.resize(n, m);
  g.converged.resize(static_cast<std::size_t>(m));
  g.iterations.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& fit = fits[static_cast<std::size_t>(j)];
    g.theta.col(j) = fit.mean.cwiseMax(0.0);
    g.theta_hat.col(j) = cfg.interval_scale * fit.stddev;
    g.converged[static_cast<std::size_t>(j)] = fit.converged;
    g.iterations[static_cast<std::size_t>(j)] = fit.iterations;
  }
  const double top = g.theta.size() > 0 ? g.theta.maxCoeff() : 0.0;
  g.normalizer = top > 0.0 ? top : 1.0;
  g.theta /= g.normalizer;
  g.theta_hat /= g.normalizer;
  return g;
}

}  // namespace socrat
