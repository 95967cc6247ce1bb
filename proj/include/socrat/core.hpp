#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace socrat {

enum class Side { input, output };
enum class Scheme { whitespace, character };

const char* to_string(Side side);
const char* to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

// One occurrence of a surface form inside a sequence. Repeated surfaces are
// distinct tokens told apart by `occurrence_rank` (1-based).
struct Token {
  std::string surface;
  std::size_t index = 0;
  std::size_t occurrence_rank = 1;

  friend bool operator==(const Token&, const Token&) = default;
};

// Ordered, immutable token occurrences of one input or output object.
//
// An empty sequence is the "absent output" marker a black box returns for
// inputs it cannot map; tokenize() never produces one.
class TokenSequence {
 public:
  TokenSequence() = default;
  TokenSequence(std::vector<std::string> surfaces, Side side, Scheme scheme);

  static TokenSequence absent(Side side = Side::output,
                              Scheme scheme = Scheme::whitespace) {
    return TokenSequence({}, side, scheme);
  }

  const std::vector<Token>& tokens() const { return tokens_; }
  const Token& operator[](std::size_t i) const { return tokens_[i]; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  bool is_absent() const { return tokens_.empty(); }
  Side side() const { return side_; }
  Scheme scheme() const { return scheme_; }

  std::vector<std::string> surfaces() const;
  // Number of occurrences of `surface` in the sequence.
  std::size_t count(std::string_view surface) const;
  bool contains(std::string_view surface) const { return count(surface) > 0; }
  // Reassembles the line: single spaces for whitespace, nothing for character.
  std::string text() const;
  // Display label, e.g. "the#2".
  std::string label(std::size_t i) const;

  TokenSequence with_side(Side side) const;

  friend bool operator==(const TokenSequence& a, const TokenSequence& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<Token> tokens_;
  Side side_ = Side::input;
  Scheme scheme_ = Scheme::whitespace;
};

// Splits `line` into tokens. Throws EmptySequence when nothing remains.
TokenSequence tokenize(std::string_view line, Scheme scheme,
                       Side side = Side::input);

// Splits a UTF-8 string into code points.
std::vector<std::string> utf8_chars(std::string_view text);

struct ExamplePair {
  TokenSequence x;
  TokenSequence y;
};

// The original pair plus its perturbed neighbours. The original is always a
// member of the effective sample set, so the effective size is
// samples.size() + 1.
struct PerturbationSet {
  ExamplePair original;
  std::vector<ExamplePair> samples;
  bool includes_original = true;

  std::size_t effective_size() const { return samples.size() + 1; }
};

// Deterministic seed fan-out: one base seed yields independent streams per
// pipeline stage and per repetition.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index = 0);

}  // namespace socrat
