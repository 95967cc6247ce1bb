#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "socrat/core.hpp"

namespace socrat {

struct PerturberConfig {
  // Perturbations to draw; 0 leaves only the original pair.
  std::size_t n_samples = 100;
  std::uint64_t seed = 0;
  // Latent variance scaling forwarded to external generative perturbers.
  double scaling = 1.0;
  std::size_t max_edit_distance = 2;
  double dropout_rate = 0.2;

  void validate() const;
};

// Unit-cost edit distance over UTF-8 code points.
std::size_t levenshtein(std::string_view a, std::string_view b);

// Up to cfg.n_samples distinct vocabulary words at edit distance
// 1..max_edit_distance from `word`, drawn uniformly without replacement.
// Throws EmptyNeighborhood when no such word exists.
std::vector<std::string> sample_edit_neighborhood(
    std::string_view word, const std::vector<std::string>& vocab,
    const PerturberConfig& cfg);

// Token dropout: every position independently fires with probability
// dropout_rate and is then deleted or replaced by a draw from
// `replacement_pool` with equal odds. Perturbations that delete every token
// are resampled; after 1000 rejected attempts the sample is `x` itself.
std::vector<TokenSequence> sample_token_perturbations(
    const TokenSequence& x, const PerturberConfig& cfg,
    const std::vector<std::string>& replacement_pool);

struct ExternalPerturberEndpoint {
  // Base URL, e.g. "http://127.0.0.1:8500". Requests go to POST /perturb.
  std::string url;
  std::chrono::milliseconds timeout{30000};
};

// Asks an external generative perturber for cfg.n_samples variations of `x`.
std::vector<TokenSequence> fetch_external_perturbations(
    const TokenSequence& x, const ExternalPerturberEndpoint& endpoint,
    const PerturberConfig& cfg);

// JSON-lines replay files: one {"kind":"original",...} record and any number
// of {"kind":"sample",...} records. An empty sample "y" is an absent output.
PerturbationSet load_perturbation_file(const std::filesystem::path& path);
void save_perturbation_file(const std::filesystem::path& path,
                            const PerturbationSet& pset);

}  // namespace socrat
