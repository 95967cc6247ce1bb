#include "socrat/evalharness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "socrat/error.hpp"
#include "socrat/parallel.hpp"

namespace socrat {

namespace {

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto bar = line.find("|||", pos);
    out.push_back(trim(line.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos)));
    if (bar == std::string::npos) break;
    pos = bar + 3;
  }
  return out;
}

std::pair<std::size_t, std::size_t> parse_edge(const std::string& item, char sep, std::size_t line) {
  const auto at = item.find(sep);
  if (at == std::string::npos || at == 0 || at + 1 == item.size()) {
    throw ParseError("bad alignment item '" + item + "'", line);
  }
  try {
    std::size_t used_i = 0, used_j = 0;
    const auto a = item.substr(0, at);
    const auto b = item.substr(at + 1);
    const auto i = std::stoul(a, &used_i);
    const auto j = std::stoul(b, &used_j);
    if (used_i != a.size() || used_j != b.size()) throw std::invalid_argument(item);
    return {i, j};
  } catch (const std::logic_error&) {
    throw ParseError("bad alignment item '" + item + "'", line);
  }
}

std::size_t intersection_size(const EdgeSet& a, const EdgeSet& b) {
  std::size_t count = 0;
  for (const auto& e : a) count += b.count(e);
  return count;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string num(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

}  // namespace

std::map<std::string, GoldAlignment> parse_gold_alignments(std::istream& in) {
  std::map<std::string, GoldAlignment> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto fields = split_fields(t);
    if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
      throw ParseError("expected 'WORD ||| sure ||| possible'", lineno);
    }
    GoldAlignment gold;
    std::istringstream sure(fields[1]);
    for (std::string item; sure >> item;) gold.sure.insert(parse_edge(item, '-', lineno));
    if (gold.sure.empty()) throw ParseError("gold alignment has no sure edges", lineno);
    gold.possible = gold.sure;
    if (fields.size() == 3) {
      std::istringstream possible(fields[2]);
      for (std::string item; possible >> item;) gold.possible.insert(parse_edge(item, '?', lineno));
    }
    const auto word = lower(fields[0]);
    if (!out.emplace(word, std::move(gold)).second) {
      throw ParseError("duplicate gold word '" + word + "'", lineno);
    }
  }
  return out;
}

std::map<std::string, GoldAlignment> load_gold_alignments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  return parse_gold_alignments(in);
}

double alignment_error_rate(const EdgeSet& predicted, const GoldAlignment& gold) {
  const EdgeSet& possible = gold.possible.empty() ? gold.sure : gold.possible;
  const double denom = static_cast<double>(predicted.size() + gold.sure.size());
  if (denom == 0.0) return 1.0;
  const double hits = static_cast<double>(intersection_size(predicted, gold.sure) +
                                          intersection_size(predicted, possible));
  return 1.0 - hits / denom;
}

double edge_f1(const EdgeSet& predicted, const EdgeSet& gold_sure) {
  const double hits = static_cast<double>(intersection_size(predicted, gold_sure));
  const double precision = predicted.empty() ? 1.0 : hits / static_cast<double>(predicted.size());
  const double recall = gold_sure.empty() ? 1.0 : hits / static_cast<double>(gold_sure.size());
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

ExperimentReport run_g2p_experiment(const G2PDictionary& dict,
                                    const std::map<std::string, GoldAlignment>& gold,
                                    const std::vector<std::size_t>& n_grid,
                                    const std::vector<std::uint64_t>& seeds,
                                    const G2PExperimentConfig& cfg) {
  if (n_grid.empty()) throw Error("n_grid must not be empty");
  if (seeds.empty()) throw Error("at least one seed is required");
  for (auto n : n_grid) {
    if (n < 1) throw Error("every n in the grid must be at least 1");
  }

  ExperimentReport report;
  auto shared = std::make_shared<const G2PDictionary>(dict);
  const auto blackbox = make_dict_g2p(shared);
  const auto vocabulary = dict.vocabulary();

  std::vector<std::pair<std::string, const GoldAlignment*>> words;
  for (const auto& [word, alignment] : gold) {
    if (dict.find(word)) {
      words.emplace_back(word, &alignment);
    } else {
      report.skipped.push_back(word);
    }
  }

  struct Task {
    std::size_t n_pos, seed_pos, word_pos;
  };
  std::vector<Task> tasks;
  for (std::size_t a = 0; a < n_grid.size(); ++a) {
    for (std::size_t b = 0; b < seeds.size(); ++b) {
      for (std::size_t c = 0; c < words.size(); ++c) tasks.push_back({a, b, c});
    }
  }
  report.records.resize(tasks.size());

  parallel_for(tasks.size(), cfg.workers, [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& [word, alignment] = words[task.word_pos];
    const auto started = std::chrono::steady_clock::now();

    PipelineConfig pcfg = cfg.pipeline;
    pcfg.perturber.kind = PerturberKind::edit_neighborhood;
    pcfg.perturber.vocabulary = vocabulary;
    pcfg.perturber.cfg.n_samples = n_grid[task.n_pos] - 1;
    pcfg.causal.workers = 1;
    // The same stream for every n, so larger budgets extend smaller ones.
    pcfg.seed = derive_seed(seeds[task.seed_pos], 0x6e2, task.word_pos);

    ExamplePair pair;
    pair.x = tokenize(word, Scheme::character, Side::input);
    pair.y = query_one(blackbox, pair.x);
    const auto e = explain(pair, blackbox, pcfg);
    const auto predicted = predict_edges(e.graph, {EdgeRuleKind::argmax_per_output, 0.0});

    auto& rec = report.records[t];
    rec.n = n_grid[task.n_pos];
    rec.seed = seeds[task.seed_pos];
    rec.word = word;
    rec.aer = alignment_error_rate(predicted, *alignment);
    rec.f1 = edge_f1(predicted, alignment->sure);
    if (cfg.record_timing) {
      rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              started)
                        .count();
    }
  });

  for (std::size_t a = 0; a < n_grid.size(); ++a) {
    std::vector<double> aer_by_seed, f1_by_seed;
    for (std::size_t b = 0; b < seeds.size(); ++b) {
      std::vector<double> aer, f1;
      for (std::size_t t = 0; t < tasks.size(); ++t) {
        if (tasks[t].n_pos != a || tasks[t].seed_pos != b) continue;
        aer.push_back(report.records[t].aer);
        f1.push_back(report.records[t].f1);
      }
      if (aer.empty()) continue;
      aer_by_seed.push_back(mean_of(aer));
      f1_by_seed.push_back(mean_of(f1));
    }
    ExperimentAggregate agg;
    agg.n = n_grid[a];
    agg.mean_aer = mean_of(aer_by_seed);
    agg.sd_aer = sample_sd(aer_by_seed);
    agg.mean_f1 = mean_of(f1_by_seed);
    agg.sd_f1 = sample_sd(f1_by_seed);
    agg.runs = aer_by_seed.size();
    report.aggregates.push_back(agg);
  }

  report.provenance = {{"pipeline", config_to_json(cfg.pipeline)},
                       {"n_grid", n_grid},
                       {"seeds", seeds},
                       {"words", words.size()},
                       {"skipped", report.skipped}};
  return report;
}

std::string report_to_csv(const ExperimentReport& report) {
  std::ostringstream out;
  out << "n,seed,word,aer,f1,wall_ms\n";
  for (const auto& r : report.records) {
    out << r.n << ',' << r.seed << ',' << r.word << ',' << num(r.aer) << ',' << num(r.f1) << ','
        << num(r.wall_ms) << '\n';
  }
  out << "\n# aggregate\n";
  out << "n,mean_aer,sd_aer,mean_f1,sd_f1,runs\n";
  for (const auto& a : report.aggregates) {
    out << a.n << ',' << num(a.mean_aer) << ',' << num(a.sd_aer) << ',' << num(a.mean_f1) << ','
        << num(a.sd_f1) << ',' << a.runs << '\n';
  }
  return out.str();
}

namespace {

std::optional<std::size_t> register_site(const TokenSequence& y, const BiasExperimentConfig& cfg) {
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j].surface == cfg.register_on || y[j].surface == cfg.register_off) return j;
  }
  return std::nullopt;
}

std::optional<std::size_t> position_of(const TokenSequence& x, const std::string& surface) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].surface == surface) return i;
  }
  return std::nullopt;
}

struct HalfResult {
  bool applicable = false;
  std::size_t site = 0;
  double strength = 0.0;
  std::size_t rank = 0;
  double median = 0.0;
};

HalfResult measure(const TokenSequence& x, const std::string& probe, const BlackBoxSpec& bb,
                   const BiasExperimentConfig& cfg, std::uint64_t seed) {
  HalfResult out;
  const auto at = position_of(x, probe);
  if (!at) return out;
  ExamplePair pair{x, query_one(bb, x)};
  const auto site = register_site(pair.y, cfg);
  if (!site) return out;

  PipelineConfig pcfg = cfg.pipeline;
  pcfg.seed = seed;
  const auto pset = collect_perturbations(pair, bb, pcfg);
  const auto graph = build_dependency_graph(pset, pcfg.causal);

  const auto col = graph.theta.col(static_cast<Eigen::Index>(*site));
  out.applicable = true;
  out.site = *site;
  out.strength = col(static_cast<Eigen::Index>(*at));
  out.rank = 1;
  for (Eigen::Index i = 0; i < col.size(); ++i) out.rank += col(i) > out.strength;
  std::vector<double> values(col.data(), col.data() + col.size());
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  out.median = values.size() % 2 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return out;
}

}  // namespace

BiasReport run_bias_experiment(const std::vector<std::string>& sentences,
                               const BiasExperimentConfig& cfg) {
  if (cfg.seeds.empty()) throw Error("at least one seed is required");
  const BlackBoxSpec bb = cfg.wrapper_enabled
                              ? make_synthetic_biased(cfg.trigger, cfg.register_on,
                                                      cfg.register_off, cfg.base)
                              : cfg.base;
  BiasReport report;
  std::vector<double> contrasts;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto with_x = tokenize(sentences[s], Scheme::whitespace);
    auto swapped = with_x.surfaces();
    for (auto& tok : swapped) {
      if (tok == cfg.trigger) tok = cfg.placebo;
    }
    const TokenSequence without_x(swapped, Side::input, Scheme::whitespace);

    for (auto seed : cfg.seeds) {
      const auto stream = derive_seed(seed, 0xb1a5, s);
      BiasRecord rec;
      rec.sentence = sentences[s];
      rec.seed = seed;
      const auto with = measure(with_x, cfg.trigger, bb, cfg, derive_seed(stream, 0));
      const auto without = measure(without_x, cfg.placebo, bb, cfg, derive_seed(stream, 1));
      rec.applicable = with.applicable && without.applicable;
      if (rec.applicable) {
        rec.register_index = with.site;
        rec.strength_with = with.strength;
        rec.rank = with.rank;
        rec.column_median = with.median;
        rec.strength_without = without.strength;
        rec.contrast = with.strength - without.strength;
        contrasts.push_back(rec.contrast);
        ++report.applicable;
        report.ranked_first += rec.rank == 1;
      }
      report.records.push_back(rec);
    }
  }
  report.mean_contrast = mean_of(contrasts);
  report.stderr_contrast =
      contrasts.empty() ? 0.0 : sample_sd(contrasts) / std::sqrt(static_cast<double>(contrasts.size()));
  return report;
}

}  // namespace socrat
