#include "socrat/blackbox.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <future>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "socrat/error.hpp"
#include "subprocess.hpp"

namespace socrat {

using json = nlohmann::json;

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// "WORD(2)" -> true
bool is_alternate(std::string_view word) {
  if (word.size() < 3 || word.back() != ')') return false;
  const auto open = word.rfind('(');
  if (open == std::string_view::npos || open == 0) return false;
  for (std::size_t i = open + 1; i + 1 < word.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(word[i]))) return false;
  }
  return open + 2 < word.size();
}

}  // namespace

G2PDictionary::G2PDictionary(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw Error("pronunciation dictionary is empty");
  for (const auto& [word, phones] : entries_) {
    if (phones.empty()) throw Error("word '" + word + "' has no phonemes");
    for (const auto& p : phones) {
      if (p.empty() || p.size() > 3) {
        throw Error("phoneme '" + p + "' of '" + word + "' is not 1-3 characters");
      }
    }
  }
}

const std::vector<std::string>* G2PDictionary::find(std::string_view word) const {
  const auto it = entries_.find(upper(word));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> G2PDictionary::vocabulary() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [word, _] : entries_) out.push_back(lower(word));
  std::sort(out.begin(), out.end());
  return out;
}

G2PDictionary load_g2p_dictionary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFile(path.string());
  std::map<std::string, std::vector<std::string>> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind(";;;", 0) == 0) continue;
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::istringstream fields(line);
    std::string word;
    fields >> word;
    std::vector<std::string> phones;
    for (std::string p; fields >> p;) {
      if (p.size() > 3) throw ParseError("phoneme '" + p + "' longer than 3 characters", lineno);
      phones.push_back(std::move(p));
    }
    if (phones.empty()) throw ParseError("entry '" + word + "' has no phonemes", lineno);
    if (is_alternate(word)) continue;
    entries.emplace(upper(word), std::move(phones));  // first pronunciation wins
  }
  if (entries.empty()) throw ParseError("dictionary has no entries", lineno);
  return G2PDictionary(std::move(entries));
}

const char* to_string(BlackBoxKind kind) {
  switch (kind) {
    case BlackBoxKind::dict_g2p: return "dict_g2p";
    case BlackBoxKind::synthetic_permuter: return "synthetic_permuter";
    case BlackBoxKind::synthetic_biased: return "synthetic_biased";
    case BlackBoxKind::subprocess: return "subprocess";
    case BlackBoxKind::http: return "http";
  }
  return "unknown";
}

void BlackBoxSpec::validate() const {
  if (batch_size == 0) throw Error("batch_size must be positive");
  switch (kind) {
    case BlackBoxKind::dict_g2p:
      if (!dictionary) throw Error("dict_g2p black box needs a dictionary");
      break;
    case BlackBoxKind::synthetic_permuter: {
      auto sorted = permutation;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i] != i) throw Error("permutation is not a permutation of 0..n-1");
      }
      break;
    }
    case BlackBoxKind::synthetic_biased:
      if (!base) throw Error("biased black box needs a base");
      if (trigger.empty() || register_on.empty() || register_off.empty()) {
        throw Error("biased black box needs trigger and register tokens");
      }
      if (register_on == register_off) throw Error("register tokens must differ");
      base->validate();
      break;
    case BlackBoxKind::subprocess:
      if (command.empty()) throw Error("subprocess black box needs a command");
      break;
    case BlackBoxKind::http:
      if (url.empty()) throw Error("http black box needs a URL");
      if (max_parallel == 0) throw Error("max_parallel must be positive");
      break;
  }
}

std::string BlackBoxSpec::describe() const {
  switch (kind) {
    case BlackBoxKind::dict_g2p:
      return "dict:" + (dictionary_path.empty() ? std::string("<memory>") : dictionary_path);
    case BlackBoxKind::synthetic_permuter: {
      if (permutation.empty()) return "identity";
      std::string out = "permute:";
      for (std::size_t i = 0; i < permutation.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(permutation[i]);
      }
      return out;
    }
    case BlackBoxKind::synthetic_biased:
      return "biased:" + trigger + "," + register_on + "," + register_off + ":" +
             (base ? base->describe() : std::string());
    case BlackBoxKind::subprocess: return "subprocess:" + command;
    case BlackBoxKind::http: return "http:" + url;
  }
  return {};
}

BlackBoxSpec make_dict_g2p(std::shared_ptr<const G2PDictionary> dictionary, std::string path) {
  BlackBoxSpec spec;
  spec.kind = BlackBoxKind::dict_g2p;
  spec.dictionary = std::move(dictionary);
  spec.dictionary_path = std::move(path);
  return spec;
}

BlackBoxSpec make_permuter(std::vector<std::size_t> permutation) {
  BlackBoxSpec spec;
  spec.kind = BlackBoxKind::synthetic_permuter;
  spec.permutation = std::move(permutation);
  return spec;
}

BlackBoxSpec make_subprocess(std::string command) {
  BlackBoxSpec spec;
  spec.kind = BlackBoxKind::subprocess;
  spec.command = std::move(command);
  return spec;
}

BlackBoxSpec make_http(std::string url) {
  BlackBoxSpec spec;
  spec.kind = BlackBoxKind::http;
  spec.url = std::move(url);
  return spec;
}

BlackBoxSpec make_synthetic_biased(std::string trigger, std::string register_on,
                                   std::string register_off, BlackBoxSpec base) {
  BlackBoxSpec spec;
  spec.kind = BlackBoxKind::synthetic_biased;
  spec.trigger = std::move(trigger);
  spec.register_on = std::move(register_on);
  spec.register_off = std::move(register_off);
  spec.base = std::make_shared<const BlackBoxSpec>(std::move(base));
  spec.validate();
  return spec;
}

BlackBoxSpec parse_blackbox_spec(std::string_view text) {
  const auto colon = text.find(':');
  const auto head = text.substr(0, colon);
  const auto rest = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (head == "identity") return make_permuter();
  if (head == "permute") {
    std::vector<std::size_t> perm;
    std::size_t pos = 0;
    while (pos < rest.size()) {
      auto comma = rest.find(',', pos);
      if (comma == std::string_view::npos) comma = rest.size();
      const auto field = rest.substr(pos, comma - pos);
      std::size_t value = 0;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw Error("bad permutation entry '" + std::string(field) + "'");
      }
      perm.push_back(value);
      pos = comma + 1;
    }
    auto spec = make_permuter(std::move(perm));
    spec.validate();
    return spec;
  }
  if (head == "dict") {
    if (rest.empty()) throw Error("dict black box needs a path");
    auto dict = std::make_shared<const G2PDictionary>(load_g2p_dictionary(std::string(rest)));
    return make_dict_g2p(std::move(dict), std::string(rest));
  }
  if (head == "subprocess") {
    if (rest.empty()) throw Error("subprocess black box needs a command");
    return make_subprocess(std::string(rest));
  }
  if (head == "http") {
    if (rest.empty()) throw Error("http black box needs a URL");
    return make_http(std::string(rest));
  }
  if (head == "biased") {
    const auto sep = rest.find(':');
    if (sep == std::string_view::npos) throw Error("biased black box needs a base spec");
    const std::string tokens(rest.substr(0, sep));
    std::vector<std::string> parts;
    std::stringstream ss(tokens);
    for (std::string part; std::getline(ss, part, ',');) parts.push_back(part);
    if (parts.size() != 3) throw Error("biased black box needs TRIGGER,ON,OFF");
    return make_synthetic_biased(parts[0], parts[1], parts[2],
                                 parse_blackbox_spec(rest.substr(sep + 1)));
  }
  throw Error("unknown black box '" + std::string(text) + "'");
}

namespace {

TokenSequence reply_to_sequence(const std::string& reply, Scheme scheme) {
  try {
    return tokenize(reply, scheme, Side::output);
  } catch (const EmptySequence&) {
    return TokenSequence::absent(Side::output, scheme);
  }
}

std::vector<TokenSequence> query_dict(const BlackBoxSpec& spec,
                                      const std::vector<TokenSequence>& inputs) {
  std::vector<TokenSequence> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    const auto* phones = spec.dictionary->find(x.text());
    out.push_back(phones ? TokenSequence(*phones, Side::output, Scheme::whitespace)
                         : TokenSequence::absent());
  }
  return out;
}

std::vector<TokenSequence> query_permuter(const BlackBoxSpec& spec,
                                          const std::vector<TokenSequence>& inputs) {
  std::vector<TokenSequence> out;
  out.reserve(inputs.size());
  for (const auto& x : inputs) {
    auto surfaces = x.surfaces();
    if (!spec.permutation.empty()) {
      std::vector<std::string> permuted;
      for (const auto src : spec.permutation) {
        if (src < surfaces.size()) permuted.push_back(surfaces[src]);
      }
      surfaces = std::move(permuted);
    }
    out.emplace_back(std::move(surfaces), Side::output, x.scheme());
  }
  return out;
}

std::vector<TokenSequence> query_biased(const BlackBoxSpec& spec,
                                        const std::vector<TokenSequence>& inputs) {
  auto base_out = query_batch(*spec.base, inputs);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (base_out[i].is_absent()) continue;
    const bool triggered = inputs[i].contains(spec.trigger);
    const auto& from = triggered ? spec.register_off : spec.register_on;
    const auto& to = triggered ? spec.register_on : spec.register_off;
    auto surfaces = base_out[i].surfaces();
    bool changed = false;
    for (auto& s : surfaces) {
      if (s == from) {
        s = to;
        changed = true;
      }
    }
    if (changed) {
      base_out[i] = TokenSequence(std::move(surfaces), Side::output, base_out[i].scheme());
    }
  }
  return base_out;
}

std::vector<TokenSequence> query_subprocess(const BlackBoxSpec& spec,
                                            const std::vector<TokenSequence>& inputs) {
  std::vector<std::string> lines;
  lines.reserve(inputs.size());
  for (const auto& x : inputs) lines.push_back(x.text());
  const auto replies = detail::run_line_protocol(spec.command, lines, spec.timeout);
  std::vector<TokenSequence> out;
  out.reserve(replies.size());
  for (const auto& r : replies) out.push_back(reply_to_sequence(r, spec.output_scheme));
  return out;
}

std::vector<std::string> post_translate(const BlackBoxSpec& spec,
                                        const std::vector<std::string>& texts,
                                        std::size_t first_index) {
  httplib::Client client(spec.url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(spec.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(spec.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  const json request = {{"inputs", texts}};
  auto res = client.Post("/translate", request.dump(), "application/json");
  if (!res) {
    throw BlackBoxFailure("black box unreachable at " + spec.url + ": " +
                              httplib::to_string(res.error()),
                          first_index);
  }
  if (res->status != 200) {
    throw BlackBoxFailure("black box answered HTTP " + std::to_string(res->status),
                          first_index);
  }
  json body;
  try {
    body = json::parse(res->body);
  } catch (const json::exception& e) {
    throw BlackBoxFailure(std::string("black box reply is not JSON: ") + e.what(),
                          first_index);
  }
  if (!body.is_object() || !body.contains("outputs") || !body["outputs"].is_array() ||
      body["outputs"].size() != texts.size()) {
    throw BlackBoxFailure("black box reply lacks a matching 'outputs' array", first_index);
  }
  std::vector<std::string> out;
  for (const auto& o : body["outputs"]) {
    if (!o.is_string()) throw BlackBoxFailure("black box output is not a string", first_index);
    out.push_back(o.get<std::string>());
  }
  return out;
}

std::vector<TokenSequence> query_http(const BlackBoxSpec& spec,
                                      const std::vector<TokenSequence>& inputs) {
  std::vector<std::vector<std::string>> chunks;
  for (std::size_t i = 0; i < inputs.size(); i += spec.batch_size) {
    std::vector<std::string> chunk;
    for (std::size_t k = i; k < std::min(inputs.size(), i + spec.batch_size); ++k) {
      chunk.push_back(inputs[k].text());
    }
    chunks.push_back(std::move(chunk));
  }

  std::vector<std::vector<std::string>> replies(chunks.size());
  for (std::size_t start = 0; start < chunks.size(); start += spec.max_parallel) {
    const std::size_t stop = std::min(chunks.size(), start + spec.max_parallel);
    std::vector<std::future<std::vector<std::string>>> pending;
    for (std::size_t c = start; c < stop; ++c) {
      pending.push_back(std::async(std::launch::async, post_translate, std::cref(spec),
                                   std::cref(chunks[c]), c * spec.batch_size));
    }
    for (std::size_t c = start; c < stop; ++c) replies[c] = pending[c - start].get();
  }

  std::vector<TokenSequence> out;
  out.reserve(inputs.size());
  for (const auto& chunk : replies) {
    for (const auto& r : chunk) out.push_back(reply_to_sequence(r, spec.output_scheme));
  }
  return out;
}

}  // namespace

std::vector<TokenSequence> query_batch(const BlackBoxSpec& spec,
                                       const std::vector<TokenSequence>& inputs) {
  spec.validate();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].empty()) throw BlackBoxFailure("empty input sequence", i);
  }
  switch (spec.kind) {
    case BlackBoxKind::dict_g2p: return query_dict(spec, inputs);
    case BlackBoxKind::synthetic_permuter: return query_permuter(spec, inputs);
    case BlackBoxKind::synthetic_biased: return query_biased(spec, inputs);
    case BlackBoxKind::subprocess: return query_subprocess(spec, inputs);
    case BlackBoxKind::http: return query_http(spec, inputs);
  }
  throw Error("unknown black box kind");
}

TokenSequence query_one(const BlackBoxSpec& spec, const TokenSequence& input) {
  return query_batch(spec, {input}).front();
}

}  // namespace socrat
