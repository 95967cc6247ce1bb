#include "socrat/core.hpp"

#include <unordered_map>

#include "socrat/error.hpp"

namespace socrat {

const char* to_string(Side side) {
  return side == Side::input ? "input" : "output";
}

const char* to_string(Scheme scheme) {
  return scheme == Scheme::whitespace ? "whitespace" : "character";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "whitespace" || name == "ws" || name == "word") {
    return Scheme::whitespace;
  }
  if (name == "character" || name == "char") return Scheme::character;
  throw Error("unknown tokenization scheme '" + std::string(name) + "'");
}

TokenSequence::TokenSequence(std::vector<std::string> surfaces, Side side,
                             Scheme scheme)
    : side_(side), scheme_(scheme) {
  std::unordered_map<std::string, std::size_t> seen;
  tokens_.reserve(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    if (surfaces[i].empty()) throw Error("token surface must be non-empty");
    const std::size_t rank = ++seen[surfaces[i]];
    tokens_.push_back(Token{std::move(surfaces[i]), i, rank});
  }
}

std::vector<std::string> TokenSequence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.surface);
  return out;
}

std::size_t TokenSequence::count(std::string_view surface) const {
  std::size_t n = 0;
  for (const auto& t : tokens_) n += (t.surface == surface);
  return n;
}

std::string TokenSequence::text() const {
  std::string out;
  for (const auto& t : tokens_) {
    if (!out.empty() && scheme_ == Scheme::whitespace) out += ' ';
    out += t.surface;
  }
  return out;
}

std::string TokenSequence::label(std::size_t i) const {
  const auto& t = tokens_.at(i);
  return t.surface + "#" + std::to_string(t.occurrence_rank);
}

TokenSequence TokenSequence::with_side(Side side) const {
  TokenSequence copy = *this;
  copy.side_ = side;
  return copy;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) len = text.size() - i;
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}

}  // namespace

TokenSequence tokenize(std::string_view line, Scheme scheme, Side side) {
  std::vector<std::string> parts;
  if (scheme == Scheme::whitespace) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && is_space(line[i])) ++i;
      const std::size_t start = i;
      while (i < line.size() && !is_space(line[i])) ++i;
      if (i > start) parts.emplace_back(line.substr(start, i - start));
    }
  } else {
    for (auto& ch : utf8_chars(line)) {
      // Line terminators are never tokens.
      if (ch != "\n" && ch != "\r") parts.push_back(std::move(ch));
    }
  }
  if (parts.empty()) throw EmptySequence();
  return TokenSequence(std::move(parts), side, scheme);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                          std::uint64_t index) {
  // splitmix64 over a mixed key
  std::uint64_t z = base ^ (stream * 0x9E3779B97F4A7C15ULL) ^
                    (index * 0xD1B54A32D192ED03ULL);
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace socrat
