#include "socrat/graph.hpp"

#include "socrat/error.hpp"

namespace socrat {

using json = nlohmann::json;

void DependencyGraph::validate() const {
  if (theta.rows() != theta_hat.rows() || theta.cols() != theta_hat.cols()) {
    throw Error("theta and theta_hat shapes differ");
  }
  if (static_cast<std::size_t>(theta.rows()) != x_nodes.size() ||
      static_cast<std::size_t>(theta.cols()) != y_nodes.size()) {
    throw Error("graph dimensions do not match its node lists");
  }
  if ((theta_hat.array() < 0.0).any()) throw Error("theta_hat must be non-negative");
  if (!theta.allFinite() || !theta_hat.allFinite()) throw Error("graph weights must be finite");
}

namespace {

json matrix_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_rows(const json& rows, Eigen::Index n, Eigen::Index m,
                                 const char* name) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
    throw Error(std::string("'") + name + "' must have one row per input node");
  }
  Eigen::MatrixXd out(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m) {
      throw Error(std::string("'") + name + "' row has the wrong length");
    }
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = row[static_cast<std::size_t>(j)].get<double>();
  }
  return out;
}

}  // namespace

json to_json(const DependencyGraph& g) {
  json j;
  j["x_nodes"] = g.x_nodes.surfaces();
  j["y_nodes"] = g.y_nodes.surfaces();
  j["x_scheme"] = to_string(g.x_nodes.scheme());
  j["y_scheme"] = to_string(g.y_nodes.scheme());
  j["theta"] = matrix_rows(g.theta);
  j["theta_hat"] = matrix_rows(g.theta_hat);
  j["converged"] = g.converged;
  j["iterations"] = g.iterations;
  j["normalizer"] = g.normalizer;
  return j;
}

DependencyGraph graph_from_json(const json& j) {
  try {
    DependencyGraph g;
    const auto xs = j.at("x_nodes").get<std::vector<std::string>>();
    const auto ys = j.at("y_nodes").get<std::vector<std::string>>();
    g.x_nodes = TokenSequence(xs, Side::input, parse_scheme(j.value("x_scheme", "whitespace")));
    g.y_nodes = TokenSequence(ys, Side::output, parse_scheme(j.value("y_scheme", "whitespace")));
    const auto n = static_cast<Eigen::Index>(xs.size());
    const auto m = static_cast<Eigen::Index>(ys.size());
    g.theta = matrix_from_rows(j.at("theta"), n, m, "theta");
    if (j.contains("theta_hat")) {
      g.theta_hat = matrix_from_rows(j.at("theta_hat"), n, m, "theta_hat");
    } else {
      g.theta_hat = Eigen::MatrixXd::Zero(n, m);
    }
    g.converged = j.value("converged", std::vector<bool>(ys.size(), true));
    g.iterations = j.value("iterations", std::vector<int>(ys.size(), 0));
    g.normalizer = j.value("normalizer", 1.0);
    g.validate();
    return g;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed graph JSON: ") + e.what());
  }
}

}  // namespace socrat
