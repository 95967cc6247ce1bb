#include "cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "socrat/error.hpp"
#include "socrat/evalharness.hpp"
#include "socrat/explain.hpp"
#include "socrat/graph.hpp"
#include "socrat/partition.hpp"

namespace socrat::cli {

using json = nlohmann::json;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonFlags {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::string out;
  bool verbose = false;
};

struct PipelineFlags {
  std::string perturber = "auto";
  std::size_t samples = 100;
  std::size_t max_edit = 2;
  double dropout = 0.2;
  std::string pool;
  std::string perturber_url;
  double scaling = 1.0;
  double alpha = 0.0;
  double beta = 1.0;
  double interval_scale = 1.0;
  // 0 = derive from the sequence lengths
  std::size_t K = 0;
  std::size_t cu_min = 0, cu_max = 0, cv_min = 0, cv_max = 0;
  double gamma = 1.0;
  double gap_tol = 1e-4;
  double time_limit = 120.0;
  std::size_t exact_threshold = 16;
  std::size_t restarts = 20;
};

struct ExplainFlags {
  std::string blackbox;
  std::string input;
  std::string output;
  std::string tokenize = "whitespace";
  std::string output_tokenize = "whitespace";
  std::string format = "json";
  double bb_timeout = 30.0;
  std::size_t max_parallel = 1;
  std::size_t batch_size = 64;
};

struct PartitionFlags {
  std::string graph;
  std::string solver = "exact";
};

struct EvalFlags {
  std::string dict;
  std::string gold;
  std::string n_grid;
  std::size_t seeds = 5;
  bool timing = false;
};

std::string env_name(const std::string& flag) {
  std::string out = "SOCRAT_";
  for (char c : flag) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_key(std::string key) {
  for (auto& c : key) c = c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// "key = value" lines; '#' starts a comment; values may be double-quoted.
std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value' in " + path, lineno);
    const auto key = normalize_key(trim(line.substr(0, eq)));
    auto value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty()) throw ParseError("empty key in " + path, lineno);
    out[key] = value;
  }
  return out;
}

std::string config_path(const std::vector<std::string>& args) {
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  if (const char* env = std::getenv("SOCRAT_CONFIG")) return env;
  return {};
}

template <typename T>
CLI::Option* define(CLI::App* app, const std::string& name, T& var, const std::string& help) {
  return app->add_option("--" + name, var, help)->envname(env_name(name));
}

void add_common(CLI::App* app, CommonFlags& c) {
  define(app, "config", c.config, "Key-value configuration file");
  define(app, "seed", c.seed, "Base seed; every stage derives its own stream");
  define(app, "workers", c.workers, "Worker threads");
  define(app, "out", c.out, "Write the result here instead of standard output");
  app->add_flag("--verbose", c.verbose, "Log one line per stage to standard error")
      ->envname(env_name("verbose"));
}

void add_pipeline(CLI::App* app, PipelineFlags& p) {
  define(app, "perturber", p.perturber, "auto | edit | dropout | external");
  define(app, "samples", p.samples, "Perturbations to draw (the original is always kept)");
  define(app, "max-edit", p.max_edit, "Edit radius of the edit-neighbourhood perturber");
  define(app, "dropout", p.dropout, "Per-token firing probability of the dropout perturber");
  define(app, "pool", p.pool, "Comma-separated replacement tokens for the dropout perturber");
  define(app, "perturber-url", p.perturber_url, "Base URL of an external perturber");
  define(app, "scaling", p.scaling, "Variance scaling passed to an external perturber");
  define(app, "alpha", p.alpha, "Prior mean of the regression weights");
  define(app, "beta", p.beta, "Prior precision of the regression weights");
  define(app, "interval-scale", p.interval_scale, "Half-width = scale * posterior stddev");
  define(app, "K", p.K, "Number of chunks (0 = automatic)");
  define(app, "cu-min", p.cu_min, "Minimum inputs per chunk (0 = automatic)");
  define(app, "cu-max", p.cu_max, "Maximum inputs per chunk (0 = automatic)");
  define(app, "cv-min", p.cv_min, "Minimum outputs per chunk (0 = automatic)");
  define(app, "cv-max", p.cv_max, "Maximum outputs per chunk (0 = automatic)");
  define(app, "gamma", p.gamma, "Uncertainty budget");
  define(app, "gap-tol", p.gap_tol, "Absolute optimality gap of the exact solver");
  define(app, "time-limit", p.time_limit, "Solver time limit in seconds");
  define(app, "exact-threshold", p.exact_threshold, "Largest |x|+|y| solved exactly");
  define(app, "restarts", p.restarts, "Local-search restarts");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return static_cast<std::size_t>(v);
  } catch (const std::logic_error&) {
    throw UsageError("invalid " + what + " '" + text + "'");
  }
}

PartitionConfig partition_config(const PipelineFlags& p, std::size_t n, std::size_t m) {
  PartitionConfig cfg = PartitionConfig::defaults_for(n, m);
  if (p.K > 0) {
    cfg.K = p.K;
    cfg.cu_max = (n + cfg.K - 1) / cfg.K + 1;
    cfg.cv_max = (m + cfg.K - 1) / cfg.K + 1;
  }
  if (p.cu_min > 0) cfg.cu_min = p.cu_min;
  if (p.cu_max > 0) cfg.cu_max = p.cu_max;
  if (p.cv_min > 0) cfg.cv_min = p.cv_min;
  if (p.cv_max > 0) cfg.cv_max = p.cv_max;
  cfg.gamma = p.gamma;
  cfg.abs_gap_tol = p.gap_tol;
  cfg.time_limit = std::chrono::duration<double>(p.time_limit);
  return cfg;
}

PipelineConfig pipeline_config(const PipelineFlags& p, const CommonFlags& c) {
  PipelineConfig cfg;
  cfg.perturber.kind = parse_perturber(p.perturber);
  cfg.perturber.cfg.n_samples = p.samples;
  cfg.perturber.cfg.max_edit_distance = p.max_edit;
  cfg.perturber.cfg.dropout_rate = p.dropout;
  cfg.perturber.cfg.scaling = p.scaling;
  cfg.perturber.replacement_pool = split_list(p.pool);
  if (!p.perturber_url.empty()) cfg.perturber.endpoint = ExternalPerturberEndpoint{p.perturber_url};
  cfg.perturber.cfg.validate();
  cfg.causal.prior.alpha = p.alpha;
  cfg.causal.prior.beta = p.beta;
  cfg.causal.interval_scale = p.interval_scale;
  cfg.causal.workers = c.workers;
  cfg.exact_threshold = p.exact_threshold;
  cfg.local_restarts = p.restarts;
  cfg.seed = c.seed;
  return cfg;
}

json common_json(const CommonFlags& c) {
  return {{"seed", c.seed}, {"workers", c.workers}, {"config", c.config}};
}

json pipeline_json(const PipelineFlags& p) {
  return {{"perturber", p.perturber}, {"samples", p.samples},       {"max_edit", p.max_edit},
          {"dropout", p.dropout},     {"pool", p.pool},             {"perturber_url", p.perturber_url},
          {"scaling", p.scaling},     {"alpha", p.alpha},           {"beta", p.beta},
          {"interval_scale", p.interval_scale}, {"K", p.K},         {"cu_min", p.cu_min},
          {"cu_max", p.cu_max},       {"cv_min", p.cv_min},         {"cv_max", p.cv_max},
          {"gamma", p.gamma},         {"gap_tol", p.gap_tol},       {"time_limit", p.time_limit},
          {"exact_threshold", p.exact_threshold}, {"restarts", p.restarts}};
}

void emit(const std::string& payload, const CommonFlags& c, std::ostream& out) {
  if (c.out.empty()) {
    out << payload;
    return;
  }
  std::ofstream file(c.out, std::ios::binary);
  if (!file) throw Error("cannot write " + c.out);
  file << payload;
}

void log(const CommonFlags& c, std::ostream& err, const std::string& line) {
  if (c.verbose) err << "socrat: " << line << '\n';
}

int cmd_explain(const CommonFlags& c, const PipelineFlags& p, const ExplainFlags& f,
                std::ostream& out, std::ostream& err) {
  if (f.blackbox.empty()) throw UsageError("explain needs --blackbox");
  if (f.input.empty()) throw UsageError("explain needs --input");
  const auto format = parse_format(f.format);

  auto bb = parse_blackbox_spec(f.blackbox);
  bb.timeout = std::chrono::milliseconds(static_cast<long long>(f.bb_timeout * 1000.0));
  bb.max_parallel = f.max_parallel;
  bb.batch_size = f.batch_size;
  bb.validate();
  log(c, err, "black box " + bb.describe());

  ExamplePair pair;
  pair.x = tokenize(f.input, parse_scheme(f.tokenize), Side::input);
  if (f.output.empty()) {
    pair.y = query_one(bb, pair.x).with_side(Side::output);
    if (pair.y.is_absent()) throw BlackBoxFailure("black box has no output for '" + f.input + "'");
    log(c, err, "queried output: " + pair.y.text());
  } else {
    pair.y = tokenize(f.output, parse_scheme(f.output_tokenize), Side::output);
  }

  auto cfg = pipeline_config(p, c);
  cfg.partition = partition_config(p, pair.x.size(), pair.y.size());
  cfg.partition->validate(pair.x.size(), pair.y.size());

  auto e = explain(pair, bb, cfg);
  log(c, err, "chunks: " + std::to_string(e.chunks.size()) +
                  ", dropped samples: " + std::to_string(e.dropped_samples));
  e.provenance["run_config"] = {{"command", "explain"},
                                {"common", common_json(c)},
                                {"pipeline", pipeline_json(p)},
                                {"blackbox", f.blackbox},
                                {"input", f.input},
                                {"output", f.output},
                                {"tokenize", f.tokenize},
                                {"output_tokenize", f.output_tokenize},
                                {"format", f.format}};
  std::string payload = render(e, format);
  if (format == RenderFormat::dot) {
    payload = "// provenance: " + e.provenance.dump() + "\n" + payload;
  } else if (format == RenderFormat::heatmap_csv) {
    payload = "# provenance: " + e.provenance.dump() + "\n" + payload;
  }
  emit(payload, c, out);
  return kOk;
}

int cmd_partition(const CommonFlags& c, const PipelineFlags& p, const PartitionFlags& f,
                  std::ostream& out, std::ostream& err) {
  if (f.graph.empty()) throw UsageError("partition needs --graph");
  const auto solver = parse_solver(f.solver);
  std::ifstream in(f.graph);
  if (!in) throw MissingFile(f.graph);
  DependencyGraph graph;
  try {
    graph = graph_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ParseError(std::string("graph JSON: ") + e.what(), 0);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what(), 0);
  }
  const auto n = static_cast<std::size_t>(graph.rows());
  const auto m = static_cast<std::size_t>(graph.cols());
  const auto cfg = partition_config(p, n, m);
  log(c, err, "graph " + std::to_string(n) + "x" + std::to_string(m) + ", solver " + f.solver);

  Partition result;
  switch (solver) {
    case SolverKind::exact: result = partition_exact(graph, cfg); break;
    case SolverKind::local_search:
      result = partition_local_search(graph, cfg, p.restarts, derive_seed(c.seed, 3));
      break;
    case SolverKind::spectral: result = cocluster_spectral(graph, cfg.K, cfg.gamma, c.seed); break;
  }
  json j = to_json(result);
  j["provenance"] = {{"command", "partition"},
                     {"common", common_json(c)},
                     {"pipeline", pipeline_json(p)},
                     {"graph", f.graph},
                     {"solver", f.solver},
                     {"resolved", {{"K", cfg.K},
                                   {"cu_min", cfg.cu_min},
                                   {"cu_max", cfg.cu_max},
                                   {"cv_min", cfg.cv_min},
                                   {"cv_max", cfg.cv_max},
                                   {"gamma", cfg.gamma},
                                   {"abs_gap_tol", cfg.abs_gap_tol},
                                   {"time_limit_s", cfg.time_limit.count()}}}};
  emit(j.dump(2) + "\n", c, out);
  return kOk;
}

int cmd_eval(const CommonFlags& c, const PipelineFlags& p, const EvalFlags& f, std::ostream& out,
             std::ostream& err) {
  if (f.dict.empty()) throw UsageError("eval needs --dict");
  if (f.gold.empty()) throw UsageError("eval needs --gold");
  std::vector<std::size_t> grid;
  for (const auto& item : split_list(f.n_grid)) grid.push_back(parse_count(item, "--n-grid entry"));
  if (grid.empty()) throw UsageError("eval needs a non-empty --n-grid, e.g. 10,100");
  for (auto n : grid) {
    if (n < 1) throw UsageError("--n-grid entries must be at least 1");
  }
  if (f.seeds < 1) throw UsageError("--seeds must be at least 1");

  const auto dict = load_g2p_dictionary(f.dict);
  const auto gold = load_gold_alignments(f.gold);
  std::vector<std::uint64_t> seeds;
  for (std::size_t s = 0; s < f.seeds; ++s) seeds.push_back(c.seed + s);

  G2PExperimentConfig cfg;
  cfg.pipeline = pipeline_config(p, c);
  cfg.pipeline.causal.workers = 1;
  cfg.workers = c.workers;
  cfg.record_timing = f.timing;
  if (p.K > 0 || p.cu_min > 0 || p.cu_max > 0 || p.cv_min > 0 || p.cv_max > 0) {
    throw UsageError("eval sizes partitions per word; chunk bounds cannot be fixed");
  }
  log(c, err, "words: " + std::to_string(gold.size()) + ", grid points: " + std::to_string(grid.size()));
  const auto report = run_g2p_experiment(dict, gold, grid, seeds, cfg);
  for (const auto& w : report.skipped) err << "socrat: gold word '" << w << "' not in dictionary, skipped\n";

  json prov = {{"command", "eval"},
               {"common", common_json(c)},
               {"pipeline", pipeline_json(p)},
               {"dict", f.dict},
               {"gold", f.gold},
               {"n_grid", grid},
               {"seeds", seeds},
               {"timing", f.timing}};
  emit(report_to_csv(report) + "\n# provenance\n" + prov.dump() + "\n", c, out);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explains structured-output black boxes through robust bipartite partitions"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  CommonFlags common;
  PipelineFlags pipeline;
  ExplainFlags ef;
  PartitionFlags pf;
  EvalFlags vf;

  auto* explain_cmd = app.add_subcommand("explain", "Explain one input/output pair");
  add_common(explain_cmd, common);
  add_pipeline(explain_cmd, pipeline);
  define(explain_cmd, "blackbox", ef.blackbox, "dict:PATH | identity | permute:.. | subprocess:CMD | http:URL | biased:T,ON,OFF:BASE");
  define(explain_cmd, "input", ef.input, "Input text");
  define(explain_cmd, "output", ef.output, "Output text (queried from the black box when omitted)");
  define(explain_cmd, "tokenize", ef.tokenize, "Input tokenization: whitespace | char");
  define(explain_cmd, "output-tokenize", ef.output_tokenize, "Tokenization of --output");
  define(explain_cmd, "format", ef.format, "json | dot | heatmap_csv");
  define(explain_cmd, "bb-timeout", ef.bb_timeout, "Black-box timeout in seconds");
  define(explain_cmd, "max-parallel", ef.max_parallel, "Concurrent HTTP requests");
  define(explain_cmd, "batch-size", ef.batch_size, "Inputs per black-box request");

  auto* partition_cmd = app.add_subcommand("partition", "Partition a dependency graph");
  add_common(partition_cmd, common);
  add_pipeline(partition_cmd, pipeline);
  define(partition_cmd, "graph", pf.graph, "Dependency graph JSON");
  define(partition_cmd, "solver", pf.solver, "exact | local | spectral");

  auto* eval_cmd = app.add_subcommand("eval", "Alignment recovery against gold alignments");
  add_common(eval_cmd, common);
  add_pipeline(eval_cmd, pipeline);
  define(eval_cmd, "dict", vf.dict, "Pronunciation dictionary");
  define(eval_cmd, "gold", vf.gold, "Gold alignments");
  define(eval_cmd, "n-grid", vf.n_grid, "Comma-separated effective sample sizes (original included)");
  define(eval_cmd, "seeds", vf.seeds, "Number of seeds: --seed, --seed+1, ...");
  eval_cmd->add_flag("--timing", vf.timing, "Record wall-clock times (output no longer reproducible)")
      ->envname(env_name("timing"));

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  if (storage.empty()) storage.emplace_back("socrat");
  for (auto& a : storage) argv.push_back(a.data());

  try {
    // Config values become defaults, so environment and flags override them.
    const auto path = config_path(storage);
    if (!path.empty()) {
      for (const auto& [key, value] : read_config(path)) {
        bool known = false;
        for (auto* cmd : {explain_cmd, partition_cmd, eval_cmd}) {
          if (auto* opt = cmd->get_option_no_throw("--" + key)) {
            opt->run_callback_for_default()->default_val(value);
            known = true;
          }
        }
        if (!known) throw UsageError("unknown key '" + key + "' in " + path);
      }
    }
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        out << app.help();
        return kOk;
      }
      err << "socrat: " << e.what() << "\n";
      return kUsage;
    }

    if (explain_cmd->parsed()) return cmd_explain(common, pipeline, ef, out, err);
    if (partition_cmd->parsed()) return cmd_partition(common, pipeline, pf, out, err);
    if (eval_cmd->parsed()) return cmd_eval(common, pipeline, vf, out, err);
    err << app.help();
    return kUsage;
  } catch (const UsageError& e) {
    err << "socrat: " << e.what() << "\n";
    return kUsage;
  } catch (const CLI::Error& e) {
    err << "socrat: " << e.what() << "\n";
    return kUsage;
  } catch (const BlackBoxFailure& e) {
    err << "socrat: black box failure: " << e.what() << "\n";
    return kBlackBoxFailure;
  } catch (const ExternalPerturberUnavailable& e) {
    err << "socrat: perturber unavailable: " << e.what() << "\n";
    return kBlackBoxFailure;
  } catch (const ProtocolError& e) {
    err << "socrat: protocol error: " << e.what() << "\n";
    return kBlackBoxFailure;
  } catch (const InfeasibleBounds& e) {
    err << "socrat: infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const InvalidK& e) {
    err << "socrat: infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const ParseError& e) {
    err << "socrat: parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const MissingFile& e) {
    err << "socrat: " << e.what() << "\n";
    return kParseError;
  } catch (const MissingOriginal& e) {
    err << "socrat: " << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    err << "socrat: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace socrat::cli
