#include "socrat/partition.hpp"

#include <cmath>
#include <sstream>

#include "socrat/error.hpp"

namespace socrat {

using json = nlohmann::json;

double DualCertificate::objective(double gamma) const {
  double total = gamma * p0;
  for (const auto& e : p) total += e.value;
  return total;
}

std::pair<double, DualCertificate> robust_term_dual(const CrossMatrix& cross,
                                                    const Eigen::MatrixXd& theta_hat,
                                                    double gamma) {
  const auto values = active_cut_values(cross, theta_hat);
  DualCertificate cert;
  if (gamma > 0.0) {
    const double whole = std::floor(gamma);
    if (whole < static_cast<double>(values.size())) {
      cert.p0 = values[static_cast<std::size_t>(whole)];
    }
  } else if (!values.empty()) {
    // With no budget every active edge is paid for through p0 alone.
    cert.p0 = values.front();
  }
  for (Eigen::Index j = 0; j < theta_hat.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta_hat.rows(); ++i) {
      if (!(theta_hat(i, j) > 0.0)) continue;
      const double demand = cross(i, j) ? theta_hat(i, j) : 0.0;
      double pij = std::max(0.0, demand - cert.p0);
      while (cert.p0 + pij < demand) pij = std::nextafter(pij, INFINITY);
      cert.p.push_back({i, j, pij});
    }
  }
  return {cert.objective(gamma), std::move(cert)};
}

bool certificate_feasible(const DualCertificate& cert, const CrossMatrix& cross,
                          const Eigen::MatrixXd& theta_hat) {
  if (!(cert.p0 >= 0.0)) return false;
  std::size_t active = 0;
  for (Eigen::Index j = 0; j < theta_hat.cols(); ++j) {
    for (Eigen::Index i = 0; i < theta_hat.rows(); ++i) active += theta_hat(i, j) > 0.0;
  }
  if (cert.p.size() != active) return false;
  for (const auto& e : cert.p) {
    if (e.i < 0 || e.j < 0 || e.i >= theta_hat.rows() || e.j >= theta_hat.cols()) return false;
    if (!(theta_hat(e.i, e.j) > 0.0)) return false;
    if (!(e.value >= 0.0)) return false;
    const double demand = cross(e.i, e.j) ? theta_hat(e.i, e.j) : 0.0;
    if (cert.p0 + e.value < demand) return false;
  }
  return true;
}

PartitionConfig PartitionConfig::defaults_for(std::size_t n, std::size_t m) {
  PartitionConfig cfg;
  const std::size_t smaller = std::min(n, m);
  cfg.K = std::max<std::size_t>(2, (smaller + 2) / 3);
  cfg.K = std::max<std::size_t>(1, std::min(cfg.K, smaller));
  cfg.cu_min = 1;
  cfg.cv_min = 1;
  cfg.cu_max = (n + cfg.K - 1) / cfg.K + 1;
  cfg.cv_max = (m + cfg.K - 1) / cfg.K + 1;
  return cfg;
}

void PartitionConfig::validate(std::size_t n, std::size_t m) const {
  if (K < 1) throw InvalidK("K must be at least 1");
  std::ostringstream why;
  if (cu_min < 1 || cv_min < 1 || cu_min > cu_max || cv_min > cv_max) {
    why << "cardinality bounds must satisfy 1 <= c_min <= c_max";
  } else if (K * cu_min > n || K * cu_max < n) {
    why << "input side of size " << n << " cannot be split into " << K << " subsets of size ["
        << cu_min << ", " << cu_max << "]";
  } else if (K * cv_min > m || K * cv_max < m) {
    why << "output side of size " << m << " cannot be split into " << K
        << " subsets of size [" << cv_min << ", " << cv_max << "]";
  } else if (!(gamma >= 0.0)) {
    why << "gamma must be non-negative";
  } else if (!(abs_gap_tol >= 0.0)) {
    why << "abs_gap_tol must be non-negative";
  }
  const auto msg = why.str();
  if (!msg.empty()) throw InfeasibleBounds(msg);
}

const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::exact: return "exact";
    case SolverKind::local_search: return "local_search";
    case SolverKind::spectral: return "spectral";
  }
  return "unknown";
}

SolverKind parse_solver(const std::string& name) {
  if (name == "exact") return SolverKind::exact;
  if (name == "local" || name == "local_search") return SolverKind::local_search;
  if (name == "spectral") return SolverKind::spectral;
  throw Error("unknown solver '" + name + "'");
}

Partition make_partition(const DependencyGraph& graph, std::vector<std::size_t> u_assign,
                         std::vector<std::size_t> v_assign, std::size_t K, double gamma,
                         SolverKind solver) {
  Partition p;
  p.K = K;
  p.solver = solver;
  p.u_assign = std::move(u_assign);
  p.v_assign = std::move(v_assign);
  p.cross.resize(graph.rows(), graph.cols());
  for (Eigen::Index i = 0; i < graph.rows(); ++i) {
    for (Eigen::Index j = 0; j < graph.cols(); ++j) {
      p.cross(i, j) = p.u_assign[static_cast<std::size_t>(i)] != p.v_assign[static_cast<std::size_t>(j)];
    }
  }
  p.cost = robust_cut_cost(p.cross, graph.theta, graph.theta_hat, gamma);
  p.certificate = robust_term_dual(p.cross, graph.theta_hat, gamma).second;
  return p;
}

std::string check_partition(const Partition& p, const DependencyGraph& graph,
                            const PartitionConfig& cfg, bool enforce_bounds) {
  const auto n = static_cast<std::size_t>(graph.rows());
  const auto m = static_cast<std::size_t>(graph.cols());
  if (p.u_assign.size() != n || p.v_assign.size() != m) return "assignment sizes differ from graph";
  std::vector<std::size_t> cu(p.K, 0), cv(p.K, 0);
  for (auto k : p.u_assign) {
    if (k >= p.K) return "input node assigned outside 0..K-1";
    ++cu[k];
  }
  for (auto k : p.v_assign) {
    if (k >= p.K) return "output node assigned outside 0..K-1";
    ++cv[k];
  }
  if (enforce_bounds) {
    for (std::size_t k = 0; k < p.K; ++k) {
      if (cu[k] < cfg.cu_min || cu[k] > cfg.cu_max) return "input subset cardinality out of bounds";
      if (cv[k] < cfg.cv_min || cv[k] > cfg.cv_max) return "output subset cardinality out of bounds";
    }
  }
  if (p.cross.rows() != graph.rows() || p.cross.cols() != graph.cols()) return "cross has wrong shape";
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const bool apart = p.u_assign[i] != p.v_assign[j];
      if (p.cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != apart) {
        return "cross indicator disagrees with the assignment";
      }
    }
  }
  const double recomputed = robust_cut_cost(p.cross, graph.theta, graph.theta_hat, cfg.gamma);
  if (std::abs(recomputed - p.cost) > 1e-9 * (1.0 + std::abs(recomputed))) {
    return "stored cost differs from the recomputed robust cost";
  }
  if (p.certificate && !certificate_feasible(*p.certificate, p.cross, graph.theta_hat)) {
    return "dual certificate is infeasible";
  }
  return {};
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> canonical_labels(
    const std::vector<std::size_t>& u_assign, const std::vector<std::size_t>& v_assign) {
  std::vector<std::size_t> map;
  auto relabel = [&](std::size_t k) {
    for (std::size_t c = 0; c < map.size(); ++c) {
      if (map[c] == k) return c;
    }
    map.push_back(k);
    return map.size() - 1;
  };
  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> out;
  for (auto k : u_assign) out.first.push_back(relabel(k));
  for (auto k : v_assign) out.second.push_back(relabel(k));
  return out;
}

json to_json(const Partition& p) {
  json j;
  j["solver"] = to_string(p.solver);
  j["K"] = p.K;
  j["u_assign"] = p.u_assign;
  j["v_assign"] = p.v_assign;
  j["cost"] = p.cost;
  j["optimal"] = p.optimal;
  j["nodes_explored"] = p.nodes_explored;
  if (p.certificate) {
    json entries = json::array();
    for (const auto& e : p.certificate->p) entries.push_back({e.i, e.j, e.value});
    j["certificate"] = {{"p0", p.certificate->p0}, {"p", entries}};
  } else {
    j["certificate"] = nullptr;
  }
  return j;
}

Partition partition_from_json(const json& j) {
  try {
    Partition p;
    p.solver = parse_solver(j.at("solver").get<std::string>());
    p.K = j.at("K").get<std::size_t>();
    p.u_assign = j.at("u_assign").get<std::vector<std::size_t>>();
    p.v_assign = j.at("v_assign").get<std::vector<std::size_t>>();
    p.cost = j.at("cost").get<double>();
    p.optimal = j.value("optimal", false);
    p.nodes_explored = j.value("nodes_explored", std::size_t{0});
    p.cross.resize(static_cast<Eigen::Index>(p.u_assign.size()),
                   static_cast<Eigen::Index>(p.v_assign.size()));
    for (std::size_t i = 0; i < p.u_assign.size(); ++i) {
      for (std::size_t k = 0; k < p.v_assign.size(); ++k) {
        p.cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            p.u_assign[i] != p.v_assign[k];
      }
    }
    if (j.contains("certificate") && !j["certificate"].is_null()) {
      DualCertificate cert;
      cert.p0 = j["certificate"].at("p0").get<double>();
      for (const auto& e : j["certificate"].at("p")) {
        cert.p.push_back({e.at(0).get<Eigen::Index>(), e.at(1).get<Eigen::Index>(),
                          e.at(2).get<double>()});
      }
      p.certificate = std::move(cert);
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed partition JSON: ") + e.what());
  }
}

}  // namespace socrat
