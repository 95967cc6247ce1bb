#include "socrat/explain.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "socrat/error.hpp"

namespace socrat {

using json = nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

// Fan-out streams of PipelineConfig::seed.
constexpr std::uint64_t kPerturbStream = 1;
constexpr std::uint64_t kSearchStream = 3;

std::string fmt(const char* pattern, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, value);
  return buf;
}

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

PerturberKind resolve_kind(const PerturberSettings& settings, const BlackBoxSpec& blackbox) {
  if (settings.kind != PerturberKind::automatic) return settings.kind;
  if (settings.endpoint) return PerturberKind::external;
  if (blackbox.kind == BlackBoxKind::dict_g2p) return PerturberKind::edit_neighborhood;
  return PerturberKind::token_dropout;
}

std::vector<TokenSequence> draw_inputs(const TokenSequence& x, const BlackBoxSpec& blackbox,
                                       const PerturberSettings& settings,
                                       const PerturberConfig& pcfg, PerturberKind& used) {
  used = resolve_kind(settings, blackbox);
  switch (used) {
    case PerturberKind::edit_neighborhood: {
      std::vector<std::string> vocab = settings.vocabulary;
      if (vocab.empty() && blackbox.kind == BlackBoxKind::dict_g2p && blackbox.dictionary) {
        vocab = blackbox.dictionary->vocabulary();
      }
      if (vocab.empty()) throw Error("edit-neighbourhood perturber needs a vocabulary");
      std::vector<std::string> words;
      try {
        words = sample_edit_neighborhood(x.text(), vocab, pcfg);
      } catch (const EmptyNeighborhood&) {
        if (settings.kind != PerturberKind::automatic) throw;
        used = PerturberKind::token_dropout;
        return sample_token_perturbations(x, pcfg, settings.replacement_pool);
      }
      std::vector<TokenSequence> out;
      out.reserve(words.size());
      for (const auto& w : words) out.push_back(tokenize(w, x.scheme(), Side::input));
      return out;
    }
    case PerturberKind::token_dropout:
      return sample_token_perturbations(x, pcfg, settings.replacement_pool);
    case PerturberKind::external:
      if (!settings.endpoint) throw Error("external perturber needs an endpoint");
      return fetch_external_perturbations(x, *settings.endpoint, pcfg);
    case PerturberKind::automatic:
      break;
  }
  throw Error("unresolved perturber kind");
}

std::vector<std::size_t> labels_of_side(const std::vector<std::size_t>& assign, std::size_t k) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i] == k) out.push_back(i);
  }
  return out;
}

}  // namespace

const char* to_string(PerturberKind kind) {
  switch (kind) {
    case PerturberKind::automatic: return "auto";
    case PerturberKind::edit_neighborhood: return "edit";
    case PerturberKind::token_dropout: return "dropout";
    case PerturberKind::external: return "external";
  }
  return "unknown";
}

PerturberKind parse_perturber(const std::string& name) {
  if (name == "auto") return PerturberKind::automatic;
  if (name == "edit" || name == "edit_neighborhood") return PerturberKind::edit_neighborhood;
  if (name == "dropout" || name == "token_dropout") return PerturberKind::token_dropout;
  if (name == "external") return PerturberKind::external;
  throw Error("unknown perturber '" + name + "'");
}

std::vector<double> importance_scores(const Partition& partition, const DependencyGraph& graph) {
  std::vector<double> scores(partition.K, 0.0);
  for (std::size_t i = 0; i < partition.u_assign.size(); ++i) {
    for (std::size_t j = 0; j < partition.v_assign.size(); ++j) {
      const std::size_t a = partition.u_assign[i];
      const std::size_t b = partition.v_assign[j];
      if (a == b) continue;
      const double w = graph.theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      scores[a] -= w;
      scores[b] -= w;
    }
  }
  return scores;
}

PerturbationSet collect_perturbations(const ExamplePair& pair, const BlackBoxSpec& blackbox,
                                      const PipelineConfig& cfg, CollectStats* stats) {
  if (pair.x.empty()) throw EmptySequence();
  if (pair.y.is_absent()) throw Error("the original output is absent; nothing to explain");

  PerturberConfig pcfg = cfg.perturber.cfg;
  pcfg.seed = derive_seed(cfg.seed, kPerturbStream);
  PerturberKind used = PerturberKind::automatic;
  const auto inputs = draw_inputs(pair.x, blackbox, cfg.perturber, pcfg, used);

  PerturbationSet pset;
  pset.original = pair;
  std::vector<TokenSequence> outputs;
  std::vector<bool> ok(inputs.size(), true);
  try {
    outputs = query_batch(blackbox, inputs);
  } catch (const BlackBoxFailure&) {
    // Retry one by one so that a bad sample only costs itself.
    outputs.assign(inputs.size(), TokenSequence::absent());
    for (std::size_t s = 0; s < inputs.size(); ++s) {
      try {
        outputs[s] = query_one(blackbox, inputs[s]);
      } catch (const BlackBoxFailure&) {
        ok[s] = false;
      }
    }
  }
  if (outputs.size() != inputs.size()) throw BlackBoxFailure("black box returned a short batch");

  const auto succeeded = static_cast<std::size_t>(std::count(ok.begin(), ok.end(), true));
  if (2 * succeeded < inputs.size()) {
    throw BlackBoxFailure("only " + std::to_string(succeeded) + " of " +
                          std::to_string(inputs.size()) + " perturbation queries succeeded");
  }
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    if (ok[s]) pset.samples.push_back({inputs[s], outputs[s].with_side(Side::output)});
  }
  if (stats) {
    stats->dropped = inputs.size() - succeeded;
    stats->perturber = used;
  }
  return pset;
}

std::vector<ExplanationChunk> make_chunks(const Partition& partition, const DependencyGraph& graph) {
  const auto scores = importance_scores(partition, graph);
  std::vector<ExplanationChunk> chunks;
  for (std::size_t k = 0; k < partition.K; ++k) {
    ExplanationChunk c;
    c.x_nodes = labels_of_side(partition.u_assign, k);
    c.y_nodes = labels_of_side(partition.v_assign, k);
    if (c.x_nodes.empty() && c.y_nodes.empty()) continue;
    c.importance = scores[k];
    for (auto i : c.x_nodes) {
      for (auto j : c.y_nodes) {
        const double w = graph.theta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (w > 0.0) c.internal_edges.push_back({i, j, w});
      }
    }
    chunks.push_back(std::move(c));
  }
  const std::size_t n = static_cast<std::size_t>(graph.rows());
  auto tie_key = [n](const ExplanationChunk& c) {
    return c.x_nodes.empty() ? n + c.y_nodes.front() : c.x_nodes.front();
  };
  std::stable_sort(chunks.begin(), chunks.end(),
                   [&](const ExplanationChunk& a, const ExplanationChunk& b) {
                     if (a.importance != b.importance) return a.importance > b.importance;
                     return tie_key(a) < tie_key(b);
                   });
  return chunks;
}

Partition select_partition(const DependencyGraph& graph, const PipelineConfig& cfg) {
  const auto n = static_cast<std::size_t>(graph.rows());
  const auto m = static_cast<std::size_t>(graph.cols());
  const PartitionConfig pcfg = cfg.partition ? *cfg.partition : PartitionConfig::defaults_for(n, m);
  if (n + m <= cfg.exact_threshold) return partition_exact(graph, pcfg);
  return partition_local_search(graph, pcfg, cfg.local_restarts,
                                derive_seed(cfg.seed, kSearchStream));
}

Explanation explain_perturbations(const PerturbationSet& pset, const PipelineConfig& cfg) {
  Explanation e;
  e.graph = build_dependency_graph(pset, cfg.causal);
  e.partition = select_partition(e.graph, cfg);
  e.chunks = make_chunks(e.partition, e.graph);
  e.effective_samples = pset.effective_size();
  e.provenance = {{"config", config_to_json(cfg)}};
  return e;
}

Explanation explain(const ExamplePair& pair, const BlackBoxSpec& blackbox,
                    const PipelineConfig& cfg) {
  CollectStats stats;
  const auto pset = collect_perturbations(pair, blackbox, cfg, &stats);
  auto e = explain_perturbations(pset, cfg);
  e.dropped_samples = stats.dropped;
  e.provenance["perturber_used"] = to_string(stats.perturber);
  e.provenance["blackbox"] = blackbox.describe();
  e.provenance["seeds"] = {{"base", cfg.seed},
                           {"perturber", derive_seed(cfg.seed, kPerturbStream)},
                           {"search", derive_seed(cfg.seed, kSearchStream)}};
  e.provenance["x"] = pair.x.text();
  e.provenance["y"] = pair.y.text();
  return e;
}

json config_to_json(const PipelineConfig& cfg) {
  const auto& p = cfg.perturber;
  json perturber = {{"kind", to_string(p.kind)},
                    {"n_samples", p.cfg.n_samples},
                    {"scaling", p.cfg.scaling},
                    {"max_edit_distance", p.cfg.max_edit_distance},
                    {"dropout_rate", p.cfg.dropout_rate},
                    {"vocabulary_size", p.vocabulary.size()},
                    {"replacement_pool", p.replacement_pool}};
  perturber["endpoint"] = p.endpoint ? json(p.endpoint->url) : json(nullptr);
  json causal = {{"alpha", cfg.causal.prior.alpha},
                 {"beta", cfg.causal.prior.beta},
                 {"interval_scale", cfg.causal.interval_scale},
                 {"tol", cfg.causal.tol},
                 {"max_iter", cfg.causal.max_iter}};
  json partition = nullptr;
  if (cfg.partition) {
    const auto& q = *cfg.partition;
    partition = {{"K", q.K},
                 {"cu_min", q.cu_min},
                 {"cu_max", q.cu_max},
                 {"cv_min", q.cv_min},
                 {"cv_max", q.cv_max},
                 {"gamma", q.gamma},
                 {"abs_gap_tol", q.abs_gap_tol},
                 {"time_limit_s", q.time_limit.count()}};
  }
  return {{"perturber", perturber},
          {"causal", causal},
          {"partition", partition},
          {"exact_threshold", cfg.exact_threshold},
          {"local_restarts", cfg.local_restarts},
          {"seed", cfg.seed}};
}

EdgeSet predict_edges(const DependencyGraph& graph, const EdgeRule& rule) {
  EdgeSet edges;
  const auto n = graph.rows();
  const auto m = graph.cols();
  if (rule.kind == EdgeRuleKind::argmax_per_output) {
    if (n == 0) return edges;
    for (Eigen::Index j = 0; j < m; ++j) {
      Eigen::Index best = 0;
      for (Eigen::Index i = 1; i < n; ++i) {
        if (graph.theta(i, j) > graph.theta(best, j)) best = i;
      }
      edges.emplace(static_cast<std::size_t>(best), static_cast<std::size_t>(j));
    }
    return edges;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      if (graph.theta(i, j) >= rule.threshold) {
        edges.emplace(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
      }
    }
  }
  return edges;
}

RenderFormat parse_format(const std::string& name) {
  if (name == "json") return RenderFormat::json;
  if (name == "dot") return RenderFormat::dot;
  if (name == "heatmap_csv" || name == "csv" || name == "heatmap") return RenderFormat::heatmap_csv;
  throw Error("unknown format '" + name + "'");
}

json to_json(const Explanation& e) {
  json chunks = json::array();
  for (const auto& c : e.chunks) {
    json edges = json::array();
    for (const auto& ed : c.internal_edges) edges.push_back({ed.i, ed.j, ed.theta});
    chunks.push_back({{"x_nodes", c.x_nodes},
                      {"y_nodes", c.y_nodes},
                      {"importance", c.importance},
                      {"internal_edges", edges}});
  }
  return {{"schema_version", kSchemaVersion},
          {"chunks", chunks},
          {"graph", to_json(e.graph)},
          {"partition", to_json(e.partition)},
          {"effective_samples", e.effective_samples},
          {"dropped_samples", e.dropped_samples},
          {"provenance", e.provenance}};
}

Explanation explanation_from_json(const json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error("unsupported explanation schema_version " + j.at("schema_version").dump());
    }
    Explanation e;
    e.graph = graph_from_json(j.at("graph"));
    e.partition = partition_from_json(j.at("partition"));
    e.effective_samples = j.at("effective_samples").get<std::size_t>();
    e.dropped_samples = j.at("dropped_samples").get<std::size_t>();
    e.provenance = j.at("provenance");
    for (const auto& c : j.at("chunks")) {
      ExplanationChunk chunk;
      chunk.x_nodes = c.at("x_nodes").get<std::vector<std::size_t>>();
      chunk.y_nodes = c.at("y_nodes").get<std::vector<std::size_t>>();
      chunk.importance = c.at("importance").get<double>();
      for (const auto& ed : c.at("internal_edges")) {
        chunk.internal_edges.push_back(
            {ed.at(0).get<std::size_t>(), ed.at(1).get<std::size_t>(), ed.at(2).get<double>()});
      }
      e.chunks.push_back(std::move(chunk));
    }
    return e;
  } catch (const json::exception& ex) {
    throw Error(std::string("malformed explanation JSON: ") + ex.what());
  }
}

namespace {

std::string render_dot(const Explanation& e) {
  std::ostringstream out;
  out << "graph explanation {\n  rankdir=LR;\n  node [shape=box];\n";
  for (std::size_t c = 0; c < e.chunks.size(); ++c) {
    const auto& chunk = e.chunks[c];
    out << "  subgraph cluster_" << c << " {\n";
    out << "    label=\"chunk " << c + 1 << " (importance " << fmt("%.4f", chunk.importance)
        << ")\";\n";
    for (auto i : chunk.x_nodes) {
      out << "    x" << i << " [label=\"" << dot_escape(e.graph.x_nodes.label(i)) << "\"];\n";
    }
    for (auto j : chunk.y_nodes) {
      out << "    y" << j << " [label=\"" << dot_escape(e.graph.y_nodes.label(j))
          << "\", shape=ellipse];\n";
    }
    out << "  }\n";
  }
  for (Eigen::Index i = 0; i < e.graph.rows(); ++i) {
    for (Eigen::Index j = 0; j < e.graph.cols(); ++j) {
      const double w = e.graph.theta(i, j);
      if (!(w > 0.0)) continue;
      out << "  x" << i << " -- y" << j << " [penwidth=" << fmt("%.3f", 0.25 + 4.0 * w)
          << ", tooltip=\"" << fmt("%.4f", w) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string render_heatmap(const Explanation& e) {
  std::vector<std::pair<std::size_t, std::size_t>> rows, cols;  // (chunk number, index)
  for (std::size_t c = 0; c < e.chunks.size(); ++c) {
    for (auto i : e.chunks[c].x_nodes) rows.emplace_back(c + 1, i);
    for (auto j : e.chunks[c].y_nodes) cols.emplace_back(c + 1, j);
  }
  std::ostringstream out;
  out << "y_chunk,";
  for (const auto& col : cols) out << ',' << col.first;
  out << "\nx_chunk,x_token";
  for (const auto& col : cols) out << ',' << csv_escape(e.graph.y_nodes.label(col.second));
  out << '\n';
  for (const auto& row : rows) {
    out << row.first << ',' << csv_escape(e.graph.x_nodes.label(row.second));
    for (const auto& col : cols) {
      out << ',' << fmt("%.6g", e.graph.theta(static_cast<Eigen::Index>(row.second),
                                              static_cast<Eigen::Index>(col.second)));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string render(const Explanation& explanation, RenderFormat format) {
  switch (format) {
    case RenderFormat::json: return to_json(explanation).dump(2) + "\n";
    case RenderFormat::dot: return render_dot(explanation);
    case RenderFormat::heatmap_csv: return render_heatmap(explanation);
  }
  return {};
}

}  // namespace socrat
