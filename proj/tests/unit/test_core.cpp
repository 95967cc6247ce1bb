#include <gtest/gtest.h>

#include <map>
#include <random>

#include "socrat/core.hpp"
#include "socrat/error.hpp"

using namespace socrat;

TEST(Tokenize, WhitespaceRanksRepeatedSurfaces) {
  const auto seq = tokenize("the cat the", Scheme::whitespace);
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq.label(0), "the#1");
  EXPECT_EQ(seq.label(1), "cat#1");
  EXPECT_EQ(seq.label(2), "the#2");
  for (std::size_t i = 0; i < seq.size(); ++i) EXPECT_EQ(seq[i].index, i);
}

TEST(Tokenize, CharacterScheme) {
  const auto seq = tokenize("ab", Scheme::character);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq.label(0), "a#1");
  EXPECT_EQ(seq.label(1), "b#1");
  EXPECT_EQ(seq.text(), "ab");
}

TEST(Tokenize, BlankLineIsEmptySequence) {
  EXPECT_THROW(tokenize("  ", Scheme::whitespace), EmptySequence);
  EXPECT_THROW(tokenize("", Scheme::character), EmptySequence);
}

TEST(Tokenize, CharacterSchemeSplitsCodePoints) {
  const auto seq = tokenize("h\xC3\xA9h", Scheme::character);  // "héh"
  ASSERT_EQ(seq.size(), 3u);
  EXPECT_EQ(seq[1].surface, "\xC3\xA9");
  EXPECT_EQ(seq.label(2), "h#2");
}

TEST(Tokenize, NoUnicodeNormalization) {
  // Precomposed and decomposed e-acute stay different surfaces.
  const auto seq = tokenize("\xC3\xA9 e\xCC\x81", Scheme::whitespace);
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_EQ(seq[0].occurrence_rank, 1u);
  EXPECT_EQ(seq[1].occurrence_rank, 1u);
}

TEST(Tokenize, WhitespaceRoundTripIsIdempotent) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> words = {"a", "b", "the", "cat", "x"};
  const std::vector<std::string> gaps = {" ", "  ", "\t", " \n "};
  for (int trial = 0; trial < 200; ++trial) {
    std::string line = gaps[rng() % gaps.size()];
    const int len = 1 + static_cast<int>(rng() % 8);
    for (int k = 0; k < len; ++k) line += words[rng() % words.size()] + gaps[rng() % gaps.size()];
    const auto once = tokenize(line, Scheme::whitespace);
    const auto twice = tokenize(once.text(), Scheme::whitespace);
    EXPECT_EQ(once, twice);
    EXPECT_EQ(twice.text(), once.text());
  }
}

TEST(Tokenize, OccurrenceRanksAreABijectionPerSurface) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::string line;
    const int len = 1 + static_cast<int>(rng() % 12);
    for (int k = 0; k < len; ++k) line += std::string(1, static_cast<char>('a' + rng() % 3)) + " ";
    const auto seq = tokenize(line, Scheme::whitespace);
    std::map<std::string, std::vector<std::size_t>> ranks;
    for (const auto& t : seq.tokens()) ranks[t.surface].push_back(t.occurrence_rank);
    for (const auto& [surface, r] : ranks) {
      for (std::size_t k = 0; k < r.size(); ++k) EXPECT_EQ(r[k], k + 1) << surface;
      EXPECT_EQ(seq.count(surface), r.size());
    }
  }
}

TEST(TokenSequence, RejectsEmptySurface) {
  EXPECT_THROW(TokenSequence({"a", ""}, Side::input, Scheme::whitespace), Error);
}

TEST(TokenSequence, AbsentMarker) {
  const auto absent = TokenSequence::absent();
  EXPECT_TRUE(absent.is_absent());
  EXPECT_EQ(absent.size(), 0u);
  EXPECT_EQ(absent.side(), Side::output);
}

TEST(TokenSequence, WithSideKeepsTokens) {
  const auto x = tokenize("a b a", Scheme::whitespace, Side::input);
  const auto y = x.with_side(Side::output);
  EXPECT_EQ(y.side(), Side::output);
  EXPECT_EQ(x, y);
}

TEST(Scheme, ParsesAliases) {
  EXPECT_EQ(parse_scheme("char"), Scheme::character);
  EXPECT_EQ(parse_scheme("character"), Scheme::character);
  EXPECT_EQ(parse_scheme("whitespace"), Scheme::whitespace);
  EXPECT_THROW(parse_scheme("bpe"), Error);
}

TEST(PerturbationSet, EffectiveSizeCountsTheOriginal) {
  PerturbationSet p;
  p.original = {tokenize("a", Scheme::whitespace), tokenize("A", Scheme::whitespace, Side::output)};
  EXPECT_TRUE(p.includes_original);
  EXPECT_EQ(p.effective_size(), 1u);
  p.samples.push_back(p.original);
  EXPECT_EQ(p.effective_size(), 2u);
}

TEST(DeriveSeed, DistinctStreamsAndStable) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 2, 4));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}
