#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>
#include <unistd.h>

#include "../../tools/cli.hpp"
#include "socrat/graph.hpp"
#include "stub_server.hpp"

using nlohmann::json;

namespace {

const std::string kData = SOCRAT_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "socrat");
  std::ostringstream out, err;
  const int code = socrat::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("socrat_cli_" + name + "_" + std::to_string(::getpid()));
  std::ofstream(path) << text;
  return path.string();
}

std::string random_graph_file(const std::string& name, int n, int m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  socrat::DependencyGraph g;
  g.theta.resize(n, m);
  g.theta_hat.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      g.theta(i, j) = u(rng);
      g.theta_hat(i, j) = 0.2 * u(rng);
    }
  std::vector<std::string> xs, ys;
  for (int i = 0; i < n; ++i) xs.push_back("a" + std::to_string(i));
  for (int j = 0; j < m; ++j) ys.push_back("B" + std::to_string(j));
  g.x_nodes = socrat::TokenSequence(xs, socrat::Side::input, socrat::Scheme::whitespace);
  g.y_nodes = socrat::TokenSequence(ys, socrat::Side::output, socrat::Scheme::whitespace);
  g.converged.assign(m, true);
  g.iterations.assign(m, 1);
  return temp_file(name, socrat::to_json(g).dump());
}

// Unsets the variable on scope exit.
struct ScopedEnv {
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST(Cli, ExplainDotSmoke) {
  const auto r = run({"explain", "--blackbox", "dict:" + kData + "/mini.dict", "--input",
                      "boolean", "--tokenize", "char", "--format", "dot"});
  ASSERT_EQ(r.code, socrat::cli::kOk) << r.err;
  EXPECT_NE(r.out.find("graph explanation {"), std::string::npos);
  EXPECT_EQ(r.out.rfind("// provenance: ", 0), 0u);
}

TEST(Cli, ExplainJsonCarriesProvenance) {
  const auto r = run({"explain", "--blackbox", "identity", "--input", "a b c", "--samples", "20",
                      "--pool", "z"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("provenance").at("run_config").at("command"), "explain");
}

TEST(Cli, UnreachableBlackBox) {
  const auto r = run({"explain", "--blackbox", "http:" + dead_url(), "--input", "a b",
                      "--bb-timeout", "0.5"});
  EXPECT_EQ(r.code, socrat::cli::kBlackBoxFailure) << r.err;
}

TEST(Cli, UnreachablePerturber) {
  const auto r = run({"explain", "--blackbox", "identity", "--input", "a b", "--perturber",
                      "external", "--perturber-url", dead_url()});
  EXPECT_EQ(r.code, socrat::cli::kBlackBoxFailure) << r.err;
}

TEST(Cli, InfeasibleBounds) {
  const auto r = run({"explain", "--blackbox", "identity", "--input", "a b c", "--K", "2",
                      "--cu-min", "2"});
  EXPECT_EQ(r.code, socrat::cli::kInfeasible) << r.err;
}

TEST(Cli, PartitionFixture) {
  const auto r = run({"partition", "--graph", kData + "/block2x2_graph.json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j.at("cost"), 0.0);
  EXPECT_EQ(j.at("optimal"), true);
  EXPECT_TRUE(j.contains("certificate"));
}

TEST(Cli, PartitionBadGraph) {
  const auto path = temp_file("bad_graph", "{\"theta\": [[1, 2], [3]]");
  EXPECT_EQ(run({"partition", "--graph", path}).code, socrat::cli::kParseError);
  const auto shape = temp_file("bad_shape", R"({"x":["a"],"y":["B"],"theta":[[1,2]],"theta_hat":[[0]]})");
  EXPECT_EQ(run({"partition", "--graph", shape}).code, socrat::cli::kParseError);
  EXPECT_EQ(run({"partition", "--graph", "/nonexistent.json"}).code, socrat::cli::kParseError);
  std::filesystem::remove(path);
  std::filesystem::remove(shape);
}

TEST(Cli, PartitionGammaMonotone) {
  const auto path = random_graph_file("gamma", 4, 4, 3);
  double prev = -1;
  for (const char* gamma : {"0", "1", "4", "16"}) {
    const auto r = run({"partition", "--graph", path, "--gamma", gamma, "--gap-tol", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    const double cost = json::parse(r.out).at("cost");
    EXPECT_GE(cost, prev);
    prev = cost;
  }
  std::filesystem::remove(path);
}

TEST(Cli, PartitionTimeLimit) {
  const auto path = random_graph_file("big", 14, 14, 4);
  const auto r = run({"partition", "--graph", path, "--K", "3", "--time-limit", "0.001"});
  std::filesystem::remove(path);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out).at("optimal"), false);
}

TEST(Cli, PartitionSolvers) {
  const auto path = random_graph_file("solvers", 5, 5, 5);
  for (const char* solver : {"exact", "local", "spectral"}) {
    const auto r = run({"partition", "--graph", path, "--solver", solver});
    EXPECT_EQ(r.code, 0) << solver << r.err;
  }
  EXPECT_EQ(run({"partition", "--graph", path, "--solver", "spectral", "--K", "9"}).code,
            socrat::cli::kInfeasible);
  std::filesystem::remove(path);
}

TEST(Cli, EvalShape) {
  const auto r = run({"eval", "--dict", kData + "/mini.dict", "--gold", kData + "/mini_gold.txt",
                      "--n-grid", "3,6", "--seeds", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto agg = r.out.find("# aggregate\n");
  const auto prov = r.out.find("\n# provenance\n");
  ASSERT_NE(agg, std::string::npos);
  ASSERT_NE(prov, std::string::npos);
  std::istringstream block(r.out.substr(agg, prov - agg));
  std::vector<std::string> lines;
  for (std::string l; std::getline(block, l);)
    if (!l.empty()) lines.push_back(l);
  ASSERT_EQ(lines.size(), 4u);  // marker, header, two rows
  EXPECT_EQ(lines[2].rfind("3,", 0), 0u);
  EXPECT_EQ(lines[3].rfind("6,", 0), 0u);
}

TEST(Cli, EvalUsageAndMissingFiles) {
  EXPECT_EQ(run({"eval", "--dict", kData + "/mini.dict", "--gold", kData + "/mini_gold.txt",
                 "--n-grid", ""}).code,
            socrat::cli::kUsage);
  EXPECT_EQ(run({"eval", "--dict", "/nonexistent.dict", "--gold", kData + "/mini_gold.txt",
                 "--n-grid", "5"}).code,
            socrat::cli::kParseError);
  EXPECT_EQ(run({"eval", "--dict", kData + "/mini.dict", "--gold", "/nonexistent.txt",
                 "--n-grid", "5"}).code,
            socrat::cli::kParseError);
  EXPECT_EQ(run({"eval", "--dict", kData + "/mini.dict", "--gold", kData + "/mini_gold.txt",
                 "--n-grid", "5", "--K", "2"}).code,
            socrat::cli::kUsage);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, socrat::cli::kUsage);
  EXPECT_EQ(run({"explain", "--no-such-flag"}).code, socrat::cli::kUsage);
  EXPECT_EQ(run({"explain", "--input", "a"}).code, socrat::cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, socrat::cli::kOk);
}

TEST(Cli, Deterministic) {
  const std::vector<std::string> explain = {"explain", "--blackbox", "dict:" + kData + "/mini.dict",
                                            "--input", "boolean", "--tokenize", "char",
                                            "--seed", "9"};
  EXPECT_EQ(run(explain).out, run(explain).out);
  const std::vector<std::string> eval = {"eval", "--dict", kData + "/mini.dict", "--gold",
                                         kData + "/mini_gold.txt", "--n-grid", "4",
                                         "--seeds", "2", "--workers", "2"};
  EXPECT_EQ(run(eval).out, run(eval).out);
}

TEST(Cli, WritesToOutFile) {
  const auto path = std::filesystem::temp_directory_path() /
                    ("socrat_cli_out_" + std::to_string(::getpid()));
  const auto r = run({"partition", "--graph", kData + "/block2x2_graph.json", "--out",
                      path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  EXPECT_EQ(json::parse(in).at("cost"), 0.0);
  std::filesystem::remove(path);
}

TEST(Cli, FlagBeatsEnvBeatsConfig) {
  const auto config = temp_file("config", "# defaults\nseed = 5\nsamples = 7\n");
  auto seed_of = [](const Result& r) {
    EXPECT_EQ(r.code, 0) << r.err;
    return json::parse(r.out).at("provenance").at("seeds").at("base").get<int>();
  };
  const std::vector<std::string> base = {"explain", "--blackbox", "identity", "--input", "a b",
                                         "--config", config};
  EXPECT_EQ(seed_of(run(base)), 5);
  {
    ScopedEnv env("SOCRAT_SEED", "6");
    EXPECT_EQ(seed_of(run(base)), 6);
    auto with_flag = base;
    with_flag.insert(with_flag.end(), {"--seed", "7"});
    EXPECT_EQ(seed_of(run(with_flag)), 7);
  }
  const auto r = run(base);
  EXPECT_EQ(json::parse(r.out).at("effective_samples"), 8);
  {
    ScopedEnv env("SOCRAT_CONFIG", config.c_str());
    EXPECT_EQ(seed_of(run({"explain", "--blackbox", "identity", "--input", "a b"})), 5);
  }
  const auto bad = temp_file("bad_config", "no_such_key = 1\n");
  EXPECT_EQ(run({"explain", "--config", bad, "--blackbox", "identity", "--input", "a"}).code,
            socrat::cli::kUsage);
  std::filesystem::remove(config);
  std::filesystem::remove(bad);
}
