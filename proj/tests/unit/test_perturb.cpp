#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <unistd.h>

#include "socrat/error.hpp"
#include "socrat/perturb.hpp"
#include "stub_server.hpp"

using namespace socrat;
using nlohmann::json;

namespace {

// Plain recursive edit distance; exponential but fine for short words.
std::size_t slow_levenshtein(const std::string& a, const std::string& b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  const std::string ra = a.substr(1), rb = b.substr(1);
  if (a[0] == b[0]) return slow_levenshtein(ra, rb);
  return 1 + std::min({slow_levenshtein(ra, b), slow_levenshtein(a, rb),
                       slow_levenshtein(ra, rb)});
}

std::set<std::string> brute_pool(const std::string& word, const std::vector<std::string>& vocab,
                                 std::size_t radius) {
  std::set<std::string> out;
  for (const auto& v : vocab) {
    const auto d = slow_levenshtein(v, word);
    if (d > 0 && d <= radius) out.insert(v);
  }
  return out;
}

std::string random_word(std::mt19937_64& rng, std::size_t max_len) {
  std::string w(1 + rng() % max_len, 'a');
  for (auto& c : w) c = static_cast<char>('a' + rng() % 3);
  return w;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() /
         ("socrat_" + name + "_" + std::to_string(::getpid()));
}

}  // namespace

TEST(Levenshtein, MatchesRecursiveOracle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const auto a = random_word(rng, 6), b = random_word(rng, 6);
    EXPECT_EQ(levenshtein(a, b), slow_levenshtein(a, b)) << a << " " << b;
  }
  EXPECT_EQ(levenshtein("", "abc"), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
}

TEST(EditNeighborhood, CatExample) {
  PerturberConfig cfg;
  cfg.n_samples = 10;
  cfg.max_edit_distance = 2;
  const std::vector<std::string> vocab = {"cat", "cot", "cut", "dog", "cart"};
  const auto got = sample_edit_neighborhood("cat", vocab, cfg);
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), brute_pool("cat", vocab, 2));
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()),
            (std::set<std::string>{"cot", "cut", "cart"}));
  EXPECT_EQ(got.size(), 3u);
}

TEST(EditNeighborhood, OnlyTheWordItselfIsEmpty) {
  PerturberConfig cfg;
  EXPECT_THROW(sample_edit_neighborhood("cat", {"cat"}, cfg), EmptyNeighborhood);
}

TEST(EditNeighborhood, RadiusOne) {
  PerturberConfig cfg;
  cfg.n_samples = 10;
  cfg.max_edit_distance = 1;
  const std::vector<std::string> vocab = {"a", "b", "ab", "xyz"};
  const auto got = sample_edit_neighborhood("a", vocab, cfg);
  EXPECT_EQ(std::set<std::string>(got.begin(), got.end()), (std::set<std::string>{"b", "ab"}));
}

TEST(EditNeighborhood, SoundAndDistinctOnRandomVocabularies) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::string> vocab;
    for (int k = 0; k < 40; ++k) vocab.push_back(random_word(rng, 5));
    const auto word = random_word(rng, 4);
    PerturberConfig cfg;
    cfg.n_samples = 1 + rng() % 12;
    cfg.max_edit_distance = 1 + rng() % 2;
    cfg.seed = rng();
    const auto pool = brute_pool(word, vocab, cfg.max_edit_distance);
    if (pool.empty()) {
      EXPECT_THROW(sample_edit_neighborhood(word, vocab, cfg), EmptyNeighborhood);
      continue;
    }
    const auto got = sample_edit_neighborhood(word, vocab, cfg);
    EXPECT_EQ(got.size(), std::min(pool.size(), cfg.n_samples));
    EXPECT_EQ(std::set<std::string>(got.begin(), got.end()).size(), got.size());
    for (const auto& w : got) EXPECT_TRUE(pool.count(w)) << w;
    EXPECT_EQ(got, sample_edit_neighborhood(word, vocab, cfg));
  }
}

TEST(EditNeighborhood, DrawsUniformly) {
  // 6 candidates, 2 drawn per call: each should appear in a third of the calls.
  const std::vector<std::string> vocab = {"ab", "ac", "ad", "ae", "af", "ag"};
  std::map<std::string, int> hits;
  const int calls = 6000;
  for (int s = 0; s < calls; ++s) {
    PerturberConfig cfg;
    cfg.n_samples = 2;
    cfg.seed = static_cast<std::uint64_t>(s);
    for (const auto& w : sample_edit_neighborhood("aa", vocab, cfg)) ++hits[w];
  }
  for (const auto& v : vocab) EXPECT_NEAR(hits[v] / double(calls), 1.0 / 3.0, 0.03) << v;
}

TEST(TokenPerturbations, ZeroRateKeepsInput) {
  PerturberConfig cfg;
  cfg.n_samples = 20;
  cfg.dropout_rate = 0.0;
  const auto x = tokenize("a b c d", Scheme::whitespace);
  const auto got = sample_token_perturbations(x, cfg, {"z"});
  ASSERT_EQ(got.size(), 20u);
  for (const auto& s : got) EXPECT_EQ(s, x);
}

TEST(TokenPerturbations, SingleTokenAlwaysReplaced) {
  PerturberConfig cfg;
  cfg.n_samples = 50;
  cfg.dropout_rate = 1.0;
  const auto x = tokenize("a", Scheme::whitespace);
  for (const auto& s : sample_token_perturbations(x, cfg, {"b"})) {
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].surface, "b");
  }
}

TEST(TokenPerturbations, ModifiedFractionMatchesRate) {
  PerturberConfig cfg;
  cfg.n_samples = 10000;
  cfg.dropout_rate = 0.2;
  cfg.seed = 99;
  const auto x = tokenize("t0 t1 t2 t3 t4 t5 t6 t7 t8 t9", Scheme::whitespace);
  const auto samples = sample_token_perturbations(x, cfg, {"r0", "r1", "r2"});
  ASSERT_EQ(samples.size(), 10000u);
  // Every position carries a distinct surface and replacements never collide
  // with the input, so kept positions are exactly the surviving t-tokens.
  std::size_t modified = 0;
  for (const auto& s : samples) {
    std::size_t kept = 0;
    for (const auto& t : s.tokens()) kept += t.surface[0] == 't';
    modified += 10 - kept;
  }
  EXPECT_NEAR(modified / 100000.0, 0.2, 0.02);
}

TEST(TokenPerturbations, DeterministicAndNeverEmpty) {
  PerturberConfig cfg;
  cfg.n_samples = 200;
  cfg.dropout_rate = 0.9;
  cfg.seed = 4;
  const auto x = tokenize("a b", Scheme::whitespace);
  const auto one = sample_token_perturbations(x, cfg, {});
  const auto two = sample_token_perturbations(x, cfg, {});
  EXPECT_EQ(one, two);
  for (const auto& s : one) EXPECT_FALSE(s.empty());
  cfg.seed = 5;
  EXPECT_NE(one, sample_token_perturbations(x, cfg, {}));
}

TEST(PerturberConfig, RejectsBadRates) {
  PerturberConfig cfg;
  cfg.dropout_rate = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg.dropout_rate = 0.2;
  cfg.scaling = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(ExternalPerturber, EchoStub) {
  StubServer stub([](httplib::Server& s) {
    s.Post("/perturb", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = json::parse(req.body);
      json samples = json::array();
      for (int k = 0; k < body["n"].get<int>(); ++k) samples.push_back(body["input"]);
      res.set_content(json{{"samples", samples}}.dump(), "application/json");
    });
  });
  PerturberConfig cfg;
  cfg.n_samples = 4;
  const auto x = tokenize("the cat sat", Scheme::whitespace);
  const auto got = fetch_external_perturbations(x, {stub.url()}, cfg);
  ASSERT_EQ(got.size(), 4u);
  for (const auto& s : got) EXPECT_EQ(s, x);
}

TEST(ExternalPerturber, SendsConfiguredFields) {
  json seen;
  StubServer stub([&seen](httplib::Server& s) {
    s.Post("/perturb", [&seen](const httplib::Request& req, httplib::Response& res) {
      seen = json::parse(req.body);
      res.set_content(R"({"samples":["a b"]})", "application/json");
    });
  });
  PerturberConfig cfg;
  cfg.n_samples = 1;
  cfg.scaling = 2.5;
  cfg.seed = 17;
  fetch_external_perturbations(tokenize("x y", Scheme::whitespace), {stub.url()}, cfg);
  EXPECT_EQ(seen["input"], "x y");
  EXPECT_EQ(seen["n"], 1);
  EXPECT_EQ(seen["scaling"], 2.5);
  EXPECT_EQ(seen["seed"], 17);
}

TEST(ExternalPerturber, ShortReplyIsProtocolError) {
  StubServer stub([](httplib::Server& s) {
    s.Post("/perturb", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"samples":["a","b"]})", "application/json");
    });
  });
  PerturberConfig cfg;
  cfg.n_samples = 3;
  EXPECT_THROW(fetch_external_perturbations(tokenize("a", Scheme::whitespace), {stub.url()}, cfg),
               ProtocolError);
}

TEST(ExternalPerturber, MalformedReplyIsProtocolError) {
  StubServer stub([](httplib::Server& s) {
    s.Post("/perturb", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("not json", "text/plain");
    });
  });
  PerturberConfig cfg;
  cfg.n_samples = 1;
  EXPECT_THROW(fetch_external_perturbations(tokenize("a", Scheme::whitespace), {stub.url()}, cfg),
               ProtocolError);
}

TEST(ExternalPerturber, UnreachableEndpoint) {
  PerturberConfig cfg;
  cfg.n_samples = 1;
  ExternalPerturberEndpoint endpoint{dead_url(), std::chrono::milliseconds(500)};
  EXPECT_THROW(fetch_external_perturbations(tokenize("a", Scheme::whitespace), endpoint, cfg),
               ExternalPerturberUnavailable);
}

TEST(ExternalPerturber, SentenceVariants) {
  const std::vector<std::string> variants = {
      "Students said they looked forward to his class .",
      "Students said they looked forward to his history .",
      "Students know they looked forward to his meal .",
      "You felt they looked forward to that class .",
      "Producers said they looked forward to his cities .",
      "Note said they looked forward to his class ."};
  StubServer stub([&variants](httplib::Server& s) {
    s.Post("/perturb", [&variants](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"samples", variants}}.dump(), "application/json");
    });
  });
  PerturberConfig cfg;
  cfg.n_samples = variants.size();
  const auto x = tokenize(variants[0], Scheme::whitespace);
  const auto got = fetch_external_perturbations(x, {stub.url()}, cfg);
  ASSERT_EQ(got.size(), variants.size());
  for (std::size_t k = 0; k < variants.size(); ++k) {
    EXPECT_EQ(got[k], tokenize(variants[k], Scheme::whitespace));
  }
  EXPECT_EQ(got[3].size(), 9u);
  EXPECT_EQ(got[3][0].surface, "You");
}

TEST(PerturbationFile, ParsesOriginalAndSamples) {
  const auto path = temp_path("pset_parse");
  {
    std::ofstream out(path);
    out << R"({"kind":"original","x":"a b","y":"A B"})" << '\n'
        << R"({"kind":"sample","x":"a","y":"A"})" << '\n'
        << '\n'
        << R"({"kind":"sample","x":"b","y":""})" << '\n';
  }
  const auto pset = load_perturbation_file(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(pset.includes_original);
  EXPECT_EQ(pset.samples.size(), 2u);
  EXPECT_EQ(pset.effective_size(), 3u);
  EXPECT_EQ(pset.original.y.text(), "A B");
  EXPECT_TRUE(pset.samples[1].y.is_absent());
}

TEST(PerturbationFile, MissingOriginal) {
  const auto path = temp_path("pset_noorig");
  {
    std::ofstream out(path);
    out << R"({"kind":"sample","x":"a","y":"A"})" << '\n';
  }
  EXPECT_THROW(load_perturbation_file(path), ParseError);  // sample before original
  {
    std::ofstream out(path);
    out << '\n';
  }
  EXPECT_THROW(load_perturbation_file(path), MissingOriginal);
  std::filesystem::remove(path);
}

TEST(PerturbationFile, BadLineReportsLineNumber) {
  const auto path = temp_path("pset_bad");
  {
    std::ofstream out(path);
    out << R"({"kind":"original","x":"a","y":"A"})" << '\n' << "{oops" << '\n';
  }
  try {
    load_perturbation_file(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::filesystem::remove(path);
}

TEST(PerturbationFile, MissingFile) {
  EXPECT_THROW(load_perturbation_file("/nonexistent/pset.jsonl"), MissingFile);
}

TEST(PerturbationFile, RoundTrip) {
  PerturbationSet pset;
  pset.original = {tokenize("h\xC3\xA9llo", Scheme::character),
                   tokenize("HH EH L OW", Scheme::whitespace, Side::output)};
  pset.samples.push_back({tokenize("hello", Scheme::character),
                          tokenize("HH AH L OW", Scheme::whitespace, Side::output)});
  pset.samples.push_back({tokenize("hullo", Scheme::character), TokenSequence::absent()});
  pset.samples.push_back(pset.samples[0]);
  const auto path = temp_path("pset_rt");
  save_perturbation_file(path, pset);
  const auto back = load_perturbation_file(path);
  const auto second = temp_path("pset_rt2");
  save_perturbation_file(second, back);
  std::ifstream a(path), b(second);
  const std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
  const std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
  std::filesystem::remove(path);
  std::filesystem::remove(second);
  EXPECT_EQ(bytes_a, bytes_b);
  EXPECT_EQ(back.original.x, pset.original.x);
  EXPECT_EQ(back.original.x.scheme(), Scheme::character);
  EXPECT_EQ(back.original.y, pset.original.y);
  ASSERT_EQ(back.samples.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back.samples[k].x, pset.samples[k].x);
    EXPECT_EQ(back.samples[k].y, pset.samples[k].y);
  }
}
