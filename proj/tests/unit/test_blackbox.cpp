#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <memory>
#include <json.hpp>
#include <random>
#include <unistd.h>

#include "socrat/blackbox.hpp"
#include "socrat/error.hpp"
#include "stub_server.hpp"

using namespace socrat;
using nlohmann::json;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("socrat_" + name + "_" + std::to_string(::getpid()));
  std::ofstream(path) << text;
  return path;
}

std::vector<TokenSequence> words(std::initializer_list<const char*> lines) {
  std::vector<TokenSequence> out;
  for (const auto* l : lines) out.push_back(tokenize(l, Scheme::whitespace));
  return out;
}

const char* kEcho = "while IFS= read -r l; do printf '%s\\n' \"$l\"; done";

}  // namespace

TEST(Dictionary, ParsesCmuFormat) {
  const auto path = write_temp("dict", ";;; comment line\nVOWELS  V AW1 AH0 L Z\nA  AH0\nA(2)  EY1\n");
  const auto dict = load_g2p_dictionary(path);
  std::filesystem::remove(path);
  EXPECT_EQ(dict.size(), 2u);
  ASSERT_NE(dict.find("vowels"), nullptr);
  EXPECT_EQ(*dict.find("vowels"), (std::vector<std::string>{"V", "AW1", "AH0", "L", "Z"}));
  EXPECT_EQ(*dict.find("A"), (std::vector<std::string>{"AH0"}));
  EXPECT_EQ(dict.find("b"), nullptr);
}

TEST(Dictionary, MalformedLineHasLineNumber) {
  const auto path = write_temp("dict_bad", ";;; x\nCAT  K AE1 T\nDOG\n");
  try {
    load_g2p_dictionary(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::filesystem::remove(path);
}

TEST(Dictionary, MissingFile) {
  EXPECT_THROW(load_g2p_dictionary("/nonexistent/dict"), MissingFile);
}

TEST(DictG2P, BundledEntries) {
  auto dict = std::make_shared<const G2PDictionary>(
      load_g2p_dictionary(std::string(SOCRAT_DATA_DIR) + "/mini.dict"));
  const auto bb = make_dict_g2p(dict);
  const auto out = query_batch(bb, {tokenize("vowels", Scheme::character),
                                    tokenize("boolean", Scheme::character),
                                    tokenize("qqqq", Scheme::character)});
  ASSERT_EQ(out.size(), 3u);
  EXPECT_EQ(out[0].text(), "V AW1 AH0 L Z");
  EXPECT_EQ(out[1].text(), "B UW0 L IY1 AH0 N");
  EXPECT_TRUE(out[2].is_absent());
  for (const auto& [word, phones] : dict->entries()) {
    for (const auto& p : phones) {
      EXPECT_GE(p.size(), 1u);
      EXPECT_LE(p.size(), 3u);
    }
  }
}

TEST(Permuter, AppliesPermutation) {
  const auto bb = parse_blackbox_spec("permute:2,0,1");
  const auto out = query_one(bb, tokenize("a b c", Scheme::whitespace));
  EXPECT_EQ(out.text(), "c a b");
  EXPECT_EQ(out.side(), Side::output);
}

TEST(Permuter, IdentityCopies) {
  const auto bb = parse_blackbox_spec("identity");
  const auto x = tokenize("a b a", Scheme::whitespace);
  EXPECT_EQ(query_one(bb, x), x);
}

TEST(Permuter, RejectsNonPermutation) {
  EXPECT_THROW(parse_blackbox_spec("permute:0,0"), Error);
  EXPECT_THROW(parse_blackbox_spec("permute:a"), Error);
  EXPECT_THROW(parse_blackbox_spec("nonsense"), Error);
}

TEST(Biased, SwapsRegisterByTrigger) {
  const auto bb = make_synthetic_biased("however", "tu", "vous", make_permuter());
  EXPECT_EQ(query_one(bb, tokenize("however vous said", Scheme::whitespace)).text(),
            "however tu said");
  EXPECT_EQ(query_one(bb, tokenize("then tu said", Scheme::whitespace)).text(), "then vous said");
  EXPECT_EQ(query_one(bb, tokenize("however nothing here", Scheme::whitespace)).text(),
            "however nothing here");
}

TEST(Biased, ParsedFromText) {
  const auto bb = parse_blackbox_spec("biased:however,tu,vous:identity");
  EXPECT_EQ(bb.kind, BlackBoxKind::synthetic_biased);
  EXPECT_EQ(query_one(bb, tokenize("vous however", Scheme::whitespace)).text(), "tu however");
}

TEST(Biased, DiffersFromBaseOnlyOnRegisterTokens) {
  const auto base = make_permuter();
  const auto bb = make_synthetic_biased("t", "on", "off", base);
  const std::vector<std::string> pool = {"t", "on", "off", "a", "b"};
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::string> s(1 + rng() % 6);
    for (auto& w : s) w = pool[rng() % pool.size()];
    const TokenSequence x(s, Side::input, Scheme::whitespace);
    const auto plain = query_one(base, x);
    const auto wrapped = query_one(bb, x);
    ASSERT_EQ(plain.size(), wrapped.size());
    for (std::size_t k = 0; k < plain.size(); ++k) {
      if (plain[k].surface == wrapped[k].surface) continue;
      EXPECT_TRUE(plain[k].surface == "on" || plain[k].surface == "off");
      EXPECT_EQ(wrapped[k].surface, x.contains("t") ? "on" : "off");
    }
  }
}

TEST(QueryBatch, DeterministicAndOrderPreserving) {
  const auto bb = parse_blackbox_spec("permute:1,0");
  const auto in = words({"a b", "c d", "e f", "g h"});
  const auto one = query_batch(bb, in);
  EXPECT_EQ(one, query_batch(bb, in));
  ASSERT_EQ(one.size(), 4u);
  EXPECT_EQ(one[2].text(), "f e");
}

TEST(QueryBatch, RejectsEmptyInput) {
  const auto bb = make_permuter();
  EXPECT_THROW(query_batch(bb, {TokenSequence::absent(Side::input)}), BlackBoxFailure);
}

TEST(Subprocess, LineProtocolEchoes) {
  auto bb = make_subprocess(kEcho);
  const auto in = words({"a b", "c", "d e f"});
  const auto out = query_batch(bb, in);
  ASSERT_EQ(out.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(out[k].text(), in[k].text());
}

TEST(Subprocess, EmptyLineIsAbsent) {
  auto bb = make_subprocess("while IFS= read -r l; do echo; done");
  const auto out = query_batch(bb, words({"a", "b"}));
  ASSERT_EQ(out.size(), 2u);
  EXPECT_TRUE(out[0].is_absent());
  EXPECT_TRUE(out[1].is_absent());
}

TEST(Subprocess, FailureCarriesIndex) {
  auto bb = make_subprocess(
      "while IFS= read -r l; do [ \"$l\" = stop ] && exit 3; printf '%s\\n' \"$l\"; done");
  try {
    query_batch(bb, words({"a", "b", "stop", "c"}));
    FAIL() << "expected BlackBoxFailure";
  } catch (const BlackBoxFailure& e) {
    EXPECT_EQ(e.index(), 2u);
  }
}

TEST(Subprocess, Timeout) {
  auto bb = make_subprocess("sleep 5");
  bb.timeout = std::chrono::milliseconds(200);
  const auto start = std::chrono::steady_clock::now();
  EXPECT_THROW(query_batch(bb, words({"a"})), BlackBoxFailure);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(4));
}

TEST(Http, BatchesAndPreservesOrder) {
  std::atomic<int> calls{0};
  StubServer stub([&calls](httplib::Server& s) {
    s.Post("/translate", [&calls](const httplib::Request& req, httplib::Response& res) {
      ++calls;
      json outputs = json::array();
      const auto body = json::parse(req.body);
      for (const auto& in : body["inputs"]) {
        auto text = in.get<std::string>();
        outputs.push_back(text == "gap" ? std::string() : "<" + text + ">");
      }
      res.set_content(json{{"outputs", outputs}}.dump(), "application/json");
    });
  });
  auto bb = make_http(stub.url());
  bb.batch_size = 2;
  bb.max_parallel = 2;
  const auto out = query_batch(bb, words({"a", "b", "gap", "d", "e"}));
  EXPECT_EQ(calls.load(), 3);
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(out[0].text(), "<a>");
  EXPECT_TRUE(out[2].is_absent());
  EXPECT_EQ(out[4].text(), "<e>");
}

TEST(Http, Non200IsFailure) {
  StubServer stub([](httplib::Server& s) {
    s.Post("/translate", [](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
    });
  });
  EXPECT_THROW(query_batch(make_http(stub.url()), words({"a"})), BlackBoxFailure);
}

TEST(Http, LengthMismatchIsFailure) {
  StubServer stub([](httplib::Server& s) {
    s.Post("/translate", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"outputs":["x"]})", "application/json");
    });
  });
  EXPECT_THROW(query_batch(make_http(stub.url()), words({"a", "b"})), BlackBoxFailure);
}

TEST(Http, Unreachable) {
  auto bb = make_http(dead_url());
  bb.timeout = std::chrono::milliseconds(500);
  EXPECT_THROW(query_batch(bb, words({"a"})), BlackBoxFailure);
}
