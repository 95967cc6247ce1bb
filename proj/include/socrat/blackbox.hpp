#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "socrat/core.hpp"

namespace socrat {

// Word -> phoneme tokens, keyed by the uppercase word as in CMU-style files.
class G2PDictionary {
 public:
  G2PDictionary() = default;
  explicit G2PDictionary(std::map<std::string, std::vector<std::string>> entries);

  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }
  // Case-insensitive lookup (ASCII).
  const std::vector<std::string>* find(std::string_view word) const;
  // All words, lowercased, sorted.
  std::vector<std::string> vocabulary() const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
};

// Reads "WORD  PH1 PH2 ..." lines. ";;;" comments and "WORD(n)" alternate
// pronunciations are skipped. Throws ParseError on malformed lines.
G2PDictionary load_g2p_dictionary(const std::filesystem::path& path);

enum class BlackBoxKind { dict_g2p, synthetic_permuter, synthetic_biased, subprocess, http };

const char* to_string(BlackBoxKind kind);

// Declarative description of a black box F: X -> Y.
struct BlackBoxSpec {
  BlackBoxKind kind = BlackBoxKind::synthetic_permuter;

  // dict_g2p
  std::shared_ptr<const G2PDictionary> dictionary;
  std::string dictionary_path;
  // synthetic_permuter: output[k] = input[permutation[k]]; positions missing
  // from a shorter input are skipped. Empty means identity.
  std::vector<std::size_t> permutation;
  // synthetic_biased
  std::string trigger;
  std::string register_on;
  std::string register_off;
  std::shared_ptr<const BlackBoxSpec> base;
  // subprocess
  std::string command;
  // http: base URL; requests go to POST /translate
  std::string url;
  std::size_t max_parallel = 1;

  // How subprocess and http replies are split into tokens.
  Scheme output_scheme = Scheme::whitespace;
  std::size_t batch_size = 64;
  std::chrono::milliseconds timeout{30000};

  void validate() const;
  // Compact textual form, the same grammar parse_blackbox_spec() accepts.
  std::string describe() const;
};

BlackBoxSpec make_dict_g2p(std::shared_ptr<const G2PDictionary> dictionary,
                           std::string path = {});
BlackBoxSpec make_permuter(std::vector<std::size_t> permutation = {});
BlackBoxSpec make_subprocess(std::string command);
BlackBoxSpec make_http(std::string url);

// Wraps `base`: if `trigger` occurs in the input, register_off tokens in the
// output become register_on, otherwise register_on tokens become register_off.
BlackBoxSpec make_synthetic_biased(std::string trigger, std::string register_on,
                                   std::string register_off, BlackBoxSpec base);

// Parses "dict:PATH", "identity", "permute:2,0,1", "subprocess:CMD",
// "http:URL" and "biased:TRIGGER,ON,OFF:BASE".
BlackBoxSpec parse_blackbox_spec(std::string_view text);

// Queries F on every input. Results are aligned by index with `inputs`; an
// input the black box cannot map yields TokenSequence::absent().
// Throws BlackBoxFailure on adapter errors.
std::vector<TokenSequence> query_batch(const BlackBoxSpec& spec,
                                       const std::vector<TokenSequence>& inputs);

TokenSequence query_one(const BlackBoxSpec& spec, const TokenSequence& input);

}  // namespace socrat
