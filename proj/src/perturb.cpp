#include "socrat/perturb.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "socrat/error.hpp"

namespace socrat {

using json = nlohmann::json;

void PerturberConfig::validate() const {
  if (max_edit_distance < 1) throw Error("max_edit_distance must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate <= 1.0)) {
    throw Error("dropout_rate must lie in [0, 1]");
  }
  if (!(scaling > 0.0)) throw Error("scaling must be positive");
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  const auto s = utf8_chars(a);
  const auto t = utf8_chars(b);
  std::vector<std::size_t> prev(t.size() + 1), cur(t.size() + 1);
  for (std::size_t j = 0; j <= t.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= s.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= t.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (s[i - 1] == t[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[t.size()];
}

std::vector<std::string> sample_edit_neighborhood(
    std::string_view word, const std::vector<std::string>& vocab,
    const PerturberConfig& cfg) {
  cfg.validate();
  if (word.empty()) throw Error("word must be non-empty");
  if (vocab.empty()) throw Error("vocabulary must be non-empty");

  std::vector<std::string> pool;
  for (const auto& v : vocab) {
    const std::size_t d = levenshtein(v, word);
    if (d > 0 && d <= cfg.max_edit_distance) pool.push_back(v);
  }
  // Sorting makes the draw independent of the vocabulary's storage order.
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.empty()) throw EmptyNeighborhood(std::string(word));

  std::mt19937_64 rng(cfg.seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  if (pool.size() > cfg.n_samples) pool.resize(cfg.n_samples);
  return pool;
}

std::vector<TokenSequence> sample_token_perturbations(
    const TokenSequence& x, const PerturberConfig& cfg,
    const std::vector<std::string>& replacement_pool) {
  cfg.validate();
  if (x.empty()) throw EmptySequence();
  constexpr int kMaxAttempts = 1000;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto original = x.surfaces();

  std::vector<TokenSequence> out;
  out.reserve(cfg.n_samples);
  for (std::size_t s = 0; s < cfg.n_samples; ++s) {
    std::vector<std::string> kept;
    bool accepted = false;
    for (int attempt = 0; attempt < kMaxAttempts && !accepted; ++attempt) {
      kept.clear();
      for (const auto& tok : original) {
        if (unit(rng) >= cfg.dropout_rate) {
          kept.push_back(tok);
          continue;
        }
        const bool replace = !replacement_pool.empty() && unit(rng) < 0.5;
        if (replace) {
          std::uniform_int_distribution<std::size_t> pick(
              0, replacement_pool.size() - 1);
          kept.push_back(replacement_pool[pick(rng)]);
        }
      }
      accepted = !kept.empty();
    }
    if (!accepted) kept = original;
    out.emplace_back(std::move(kept), x.side(), x.scheme());
  }
  return out;
}

std::vector<TokenSequence> fetch_external_perturbations(
    const TokenSequence& x, const ExternalPerturberEndpoint& endpoint,
    const PerturberConfig& cfg) {
  cfg.validate();
  if (cfg.n_samples == 0) return {};
  const json request = {{"input", x.text()},
                        {"n", cfg.n_samples},
                        {"scaling", cfg.scaling},
                        {"seed", cfg.seed}};

  httplib::Result res{nullptr, httplib::Error::Unknown};
  try {
    httplib::Client client(endpoint.url);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
        endpoint.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    res = client.Post("/perturb", request.dump(), "application/json");
  } catch (const std::exception& e) {
    throw ExternalPerturberUnavailable(std::string("perturber: ") + e.what());
  }
  if (!res) {
    throw ExternalPerturberUnavailable("perturber unreachable at " +
                                       endpoint.url + ": " +
                                       httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ExternalPerturberUnavailable("perturber answered HTTP " +
                                       std::to_string(res->status));
  }

  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("perturber response is not JSON: ") + e.what());
  }
  if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array()) {
    throw ProtocolError("perturber response lacks a 'samples' array");
  }
  const auto& samples = body["samples"];
  if (samples.size() != cfg.n_samples) {
    throw ProtocolError("perturber returned " + std::to_string(samples.size()) +
                        " samples, expected " + std::to_string(cfg.n_samples));
  }
  std::vector<TokenSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (!s.is_string()) throw ProtocolError("perturber sample is not a string");
    try {
      out.push_back(tokenize(s.get<std::string>(), x.scheme(), x.side()));
    } catch (const EmptySequence&) {
      throw ProtocolError("perturber returned an empty sample");
    }
  }
  return out;
}

namespace {

TokenSequence read_sequence(const json& rec, const char* field, Scheme scheme,
                            Side side, std::size_t line, bool allow_absent) {
  if (!rec.contains(field) || !rec[field].is_string()) {
    throw ParseError(std::string("missing string field '") + field + "'", line);
  }
  const auto text = rec[field].get<std::string>();
  try {
    return tokenize(text, scheme, side);
  } catch (const EmptySequence&) {
    if (allow_absent) return TokenSequence::absent(side, scheme);
    throw ParseError(std::string("field '") + field + "' is empty", line);
  }
}

}  // namespace

PerturbationSet load_perturbation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());

  PerturbationSet pset;
  bool have_original = false;
  Scheme x_scheme = Scheme::whitespace;
  Scheme y_scheme = Scheme::whitespace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(e.what(), lineno);
    }
    if (!rec.is_object() || !rec.contains("kind") || !rec["kind"].is_string()) {
      throw ParseError("record lacks a 'kind' field", lineno);
    }
    const auto kind = rec["kind"].get<std::string>();
    if (kind == "original") {
      if (have_original) throw ParseError("duplicate original record", lineno);
      if (rec.contains("scheme")) {
        try {
          x_scheme = parse_scheme(rec["scheme"].value("x", "whitespace"));
          y_scheme = parse_scheme(rec["scheme"].value("y", "whitespace"));
        } catch (const std::exception& e) {
          throw ParseError(e.what(), lineno);
        }
      }
      pset.original.x = read_sequence(rec, "x", x_scheme, Side::input, lineno, false);
      pset.original.y = read_sequence(rec, "y", y_scheme, Side::output, lineno, false);
      have_original = true;
    } else if (kind == "sample") {
      if (!have_original) throw ParseError("sample record before the original", lineno);
      ExamplePair pair;
      pair.x = read_sequence(rec, "x", x_scheme, Side::input, lineno, false);
      pair.y = read_sequence(rec, "y", y_scheme, Side::output, lineno, true);
      pset.samples.push_back(std::move(pair));
    } else {
      throw ParseError("unknown record kind '" + kind + "'", lineno);
    }
  }
  if (!have_original) throw MissingOriginal();
  pset.includes_original = true;
  return pset;
}

void save_perturbation_file(const std::filesystem::path& path,
                            const PerturbationSet& pset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write perturbation file " + path.string());
  json original = {{"kind", "original"},
                   {"x", pset.original.x.text()},
                   {"y", pset.original.y.text()},
                   {"scheme",
                    {{"x", to_string(pset.original.x.scheme())},
                     {"y", to_string(pset.original.y.scheme())}}}};
  out << original.dump() << '\n';
  for (const auto& s : pset.samples) {
    json rec = {{"kind", "sample"}, {"x", s.x.text()}, {"y", s.y.text()}};
    out << rec.dump() << '\n';
  }
}

}  // namespace socrat
