#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "socrat/blackbox.hpp"
#include "socrat/causal.hpp"
#include "socrat/core.hpp"
#include "socrat/partition.hpp"
#include "socrat/perturb.hpp"

namespace socrat {

enum class PerturberKind {
  automatic,          // edit neighbourhood for dictionary black boxes, else dropout
  edit_neighborhood,  // vocabulary words within the edit radius of x
  token_dropout,
  external,
};

const char* to_string(PerturberKind kind);
PerturberKind parse_perturber(const std::string& name);

struct PerturberSettings {
  PerturberKind kind = PerturberKind::automatic;
  PerturberConfig cfg;
  // Edit-neighbourhood vocabulary; empty means "the dictionary's words".
  std::vector<std::string> vocabulary;
  std::vector<std::string> replacement_pool;
  std::optional<ExternalPerturberEndpoint> endpoint;
};

struct PipelineConfig {
  PerturberSettings perturber;
  CausalConfig causal;
  // Unset means PartitionConfig::defaults_for(|x|, |y|).
  std::optional<PartitionConfig> partition;
  // Exact branch and bound up to this many nodes, local search above.
  std::size_t exact_threshold = 16;
  std::size_t local_restarts = 20;
  std::uint64_t seed = 0;
};

struct InternalEdge {
  std::size_t i = 0;
  std::size_t j = 0;
  double theta = 0.0;
};

struct ExplanationChunk {
  std::vector<std::size_t> x_nodes;
  std::vector<std::size_t> y_nodes;
  // Minus the theta mass of edges with exactly one endpoint in the chunk.
  double importance = 0.0;
  std::vector<InternalEdge> internal_edges;
};

struct Explanation {
  // Sorted by importance, least negative first; ties by smallest input index.
  std::vector<ExplanationChunk> chunks;
  DependencyGraph graph;
  Partition partition;
  std::size_t effective_samples = 0;
  std::size_t dropped_samples = 0;
  nlohmann::json provenance;
};

// Importance of every subset label 0..K-1 of `partition`.
std::vector<double> importance_scores(const Partition& partition, const DependencyGraph& graph);

struct CollectStats {
  std::size_t dropped = 0;
  // The perturber actually used after resolving `automatic` and fallbacks.
  PerturberKind perturber = PerturberKind::automatic;
};

// Perturbs pair.x, queries the black box and assembles the perturbation set.
// Samples whose query fails are dropped; fewer than half succeeding throws
// BlackBoxFailure.
PerturbationSet collect_perturbations(const ExamplePair& pair, const BlackBoxSpec& blackbox,
                                      const PipelineConfig& cfg, CollectStats* stats = nullptr);

// Turns a graph and a partition into sorted chunks.
std::vector<ExplanationChunk> make_chunks(const Partition& partition, const DependencyGraph& graph);

// Partition stage: exact up to cfg.exact_threshold nodes, local search above.
Partition select_partition(const DependencyGraph& graph, const PipelineConfig& cfg);

// Graph -> partition -> sorted chunks, for a precomputed perturbation set.
Explanation explain_perturbations(const PerturbationSet& pset, const PipelineConfig& cfg);

// The full pipeline: perturb, query, infer, partition, score, sort.
Explanation explain(const ExamplePair& pair, const BlackBoxSpec& blackbox,
                    const PipelineConfig& cfg);

nlohmann::json config_to_json(const PipelineConfig& cfg);

enum class EdgeRuleKind { argmax_per_output, threshold };

struct EdgeRule {
  EdgeRuleKind kind = EdgeRuleKind::argmax_per_output;
  double threshold = 0.0;
};

using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

// argmax_per_output: (argmax_i theta_ij, j) for every j, ties to smallest i.
// threshold: every (i, j) with theta_ij >= t.
EdgeSet predict_edges(const DependencyGraph& graph, const EdgeRule& rule);

enum class RenderFormat { json, dot, heatmap_csv };

RenderFormat parse_format(const std::string& name);

std::string render(const Explanation& explanation, RenderFormat format);
nlohmann::json to_json(const Explanation& explanation);
Explanation explanation_from_json(const nlohmann::json& j);

}  // namespace socrat
