#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "socrat/blackbox.hpp"
#include "socrat/explain.hpp"

namespace socrat {

// Gold word alignment. `possible` always contains `sure`.
struct GoldAlignment {
  EdgeSet sure;
  EdgeSet possible;
};

// Pharaoh-style lines: "WORD ||| i-j i-j ... ||| i?j ...". "-" marks a sure
// edge, "?" a possible-only edge; the third field is optional. Keys are
// lowercased words.
std::map<std::string, GoldAlignment> parse_gold_alignments(std::istream& in);
std::map<std::string, GoldAlignment> load_gold_alignments(const std::filesystem::path& path);

// 1 - (|A & S| + |A & P|) / (|A| + |S|); 1 when both A and S are empty.
double alignment_error_rate(const EdgeSet& predicted, const GoldAlignment& gold);
// Harmonic mean of precision (1 for empty A) and recall (1 for empty S).
double edge_f1(const EdgeSet& predicted, const EdgeSet& gold_sure);

struct G2PExperimentConfig {
  PipelineConfig pipeline;
  std::size_t workers = 1;
  // When false wall_ms is reported as 0 so the CSV is byte-reproducible.
  bool record_timing = false;
};

struct ExperimentRecord {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string word;
  double aer = 0.0;
  double f1 = 0.0;
  double wall_ms = 0.0;
};

struct ExperimentAggregate {
  std::size_t n = 0;
  // Mean over seeds of the per-seed mean over words, and the sample
  // standard deviation of those per-seed means.
  double mean_aer = 0.0;
  double sd_aer = 0.0;
  double mean_f1 = 0.0;
  double sd_f1 = 0.0;
  std::size_t runs = 0;
};

struct ExperimentReport {
  std::vector<ExperimentRecord> records;  // sorted by (n, seed position, word)
  std::vector<ExperimentAggregate> aggregates;  // one per n, grid order
  std::vector<std::string> skipped;  // gold words missing from the dictionary
  nlohmann::json provenance;
};

// `n` counts effective samples: the original pair plus n - 1 perturbations.
ExperimentReport run_g2p_experiment(const G2PDictionary& dict,
                                    const std::map<std::string, GoldAlignment>& gold,
                                    const std::vector<std::size_t>& n_grid,
                                    const std::vector<std::uint64_t>& seeds,
                                    const G2PExperimentConfig& cfg);

std::string report_to_csv(const ExperimentReport& report);

struct BiasExperimentConfig {
  std::string trigger;
  std::string register_on;
  std::string register_off;
  // Stand-in for the trigger in the "without" half of each matched pair.
  std::string placebo = "then";
  BlackBoxSpec base;
  bool wrapper_enabled = true;
  PipelineConfig pipeline;
  std::vector<std::uint64_t> seeds;
};

struct BiasRecord {
  std::string sentence;
  std::uint64_t seed = 0;
  bool applicable = false;
  std::size_t register_index = 0;  // output position of the register site
  double strength_with = 0.0;
  // 1 + number of inputs with a strictly larger coefficient on that output.
  std::size_t rank = 0;
  double column_median = 0.0;
  double strength_without = 0.0;
  double contrast = 0.0;
};

struct BiasReport {
  std::vector<BiasRecord> records;
  double mean_contrast = 0.0;
  double stderr_contrast = 0.0;
  std::size_t applicable = 0;
  std::size_t ranked_first = 0;
};

// Each sentence must contain the trigger. Its matched partner replaces the
// trigger with the placebo; the register site is the first output token equal
// to register_on or register_off.
BiasReport run_bias_experiment(const std::vector<std::string>& sentences,
                               const BiasExperimentConfig& cfg);

}  // namespace socrat
