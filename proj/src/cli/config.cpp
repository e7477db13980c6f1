// Copyright 2026 The AprAD Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "aprad/cli.hpp"

namespace aprad::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

bool is_count(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Strict section reader: every key must be consumed exactly once.
class Section {
 public:
  Section(const json& obj, std::string name) : obj_(obj), name_(std::move(name)) {
    if (!obj.is_object()) fail("", "an object");
  }

  const json* take(const std::string& key) {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  void read(const std::string& key, std::string& dst) {
    if (const json* v = take(key)) {
      if (!v->is_string()) fail(key, "a string");
      dst = v->get<std::string>();
    }
  }
  void read(const std::string& key, std::size_t& dst) {
    if (const json* v = take(key)) {
      if (!is_count(*v)) fail(key, "a non-negative integer");
      dst = v->get<std::size_t>();
    }
  }
  void read(const std::string& key, bool& dst) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) fail(key, "a boolean");
      dst = v->get<bool>();
    }
  }
  void read(const std::string& key, std::optional<double>& dst) {
    if (const json* v = take(key)) {
      if (v->is_null()) dst.reset();
      else if (v->is_number()) dst = v->get<double>();
      else fail(key, "a number or null");
    }
  }
  void read(const std::string& key, std::optional<std::size_t>& dst) {
    if (const json* v = take(key)) {
      if (v->is_null()) dst.reset();
      else if (is_count(*v)) dst = v->get<std::size_t>();
      else fail(key, "a non-negative integer or null");
    }
  }
  void read(const std::string& key, std::optional<std::string>& dst) {
    if (const json* v = take(key)) {
      if (v->is_null()) dst.reset();
      else if (v->is_string()) dst = v->get<std::string>();
      else fail(key, "a string or null");
    }
  }
  void read(const std::string& key, std::vector<std::string>& dst) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of strings");
      dst.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(key, "an array of strings");
        dst.push_back(e.get<std::string>());
      }
    }
  }
  void read(const std::string& key, std::vector<std::uint64_t>& dst) {
    if (const json* v = take(key)) {
      if (!v->is_array()) fail(key, "an array of non-negative integers");
      dst.clear();
      for (const auto& e : *v) {
        if (!is_count(e)) fail(key, "an array of non-negative integers");
        dst.push_back(e.get<std::uint64_t>());
      }
    }
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw ConfigError("unknown config key '" + qualified(it.key()) + "'");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const char* expected) const {
    throw ConfigError("config key '" + qualified(key) + "' must be " + expected);
  }

 private:
  std::string qualified(const std::string& key) const {
    if (name_.empty()) return key;
    return key.empty() ? name_ : name_ + "." + key;
  }

  const json& obj_;
  std::string name_;
  std::set<std::string> seen_;
};

Method method_or_throw(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw ConfigError("unknown method '" + name + "'");
  return *m;
}

}  // namespace

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::kTable: return "table";
    case OutputFormat::kCsv: return "csv";
    case OutputFormat::kJson: return "json";
  }
  return "table";
}

std::optional<OutputFormat> parse_output_format(std::string_view name) {
  for (auto f : {OutputFormat::kTable, OutputFormat::kCsv, OutputFormat::kJson}) {
    if (name == to_string(f)) return f;
  }
  return std::nullopt;
}

std::string_view to_string(CachePolicy policy) {
  return policy == CachePolicy::kEpisode ? "episode" : "path";
}

std::optional<CachePolicy> parse_cache_policy(std::string_view name) {
  if (name == "path") return CachePolicy::kCurrentPath;
  if (name == "episode") return CachePolicy::kEpisode;
  return std::nullopt;
}

ordered_json to_json(const RunConfig& c) {
  ordered_json j;
  j["vocab"] = c.vocab;
  j["model"] = c.model;
  j["eos"] = c.eos ? ordered_json(*c.eos) : ordered_json(nullptr);
  j["error"] = c.error;
  j["prompt"] = c.prompt;
  j["method"] = std::string(to_string(c.method));
  j["seeds"] = c.seeds;
  auto& gen = j["generation"];
  gen["length"] = c.length;
  gen["budget"] = c.budget;
  gen["stop_on_eos"] = c.stop_on_eos;
  gen["cache"] = std::string(to_string(c.cache));
  auto& sampling = j["sampling"];
  const auto& t = c.transforms;
  sampling["temperature"] = t.temperature ? ordered_json(*t.temperature) : ordered_json(nullptr);
  sampling["top_k"] = t.top_k ? ordered_json(*t.top_k) : ordered_json(nullptr);
  sampling["top_p"] = t.top_p ? ordered_json(*t.top_p) : ordered_json(nullptr);
  auto& bench = j["testbench"];
  bench["specs"] = c.specs;
  bench["methods"] = ordered_json::array();
  for (Method m : c.methods) bench["methods"].push_back(std::string(to_string(m)));
  bench["samples"] = c.samples;
  bench["persist_exclusions"] = c.persist_exclusions;
  bench["threads"] = c.threads;
  auto& output = j["output"];
  output["format"] = std::string(to_string(c.output));
  output["path"] = c.output_path;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section top(j, "");
  top.read("vocab", c.vocab);
  top.read("model", c.model);
  top.read("eos", c.eos);
  top.read("error", c.error);
  top.read("prompt", c.prompt);
  std::string method(to_string(c.method));
  top.read("method", method);
  c.method = method_or_throw(method);
  top.read("seeds", c.seeds);

  if (const json* g = top.take("generation")) {
    Section s(*g, "generation");
    s.read("length", c.length);
    s.read("budget", c.budget);
    s.read("stop_on_eos", c.stop_on_eos);
    std::string cache(to_string(c.cache));
    s.read("cache", cache);
    const auto policy = parse_cache_policy(cache);
    if (!policy) s.fail("cache", "\"path\" or \"episode\"");
    c.cache = *policy;
    s.finish();
  }
  if (const json* g = top.take("sampling")) {
    Section s(*g, "sampling");
    s.read("temperature", c.transforms.temperature);
    s.read("top_k", c.transforms.top_k);
    s.read("top_p", c.transforms.top_p);
    s.finish();
  }
  if (const json* g = top.take("testbench")) {
    Section s(*g, "testbench");
    s.read("specs", c.specs);
    std::vector<std::string> methods;
    if (s.take("methods")) {
      s.read("methods", methods);
      c.methods.clear();
      for (const auto& m : methods) c.methods.push_back(method_or_throw(m));
    }
    s.read("samples", c.samples);
    s.read("persist_exclusions", c.persist_exclusions);
    s.read("threads", c.threads);
    s.finish();
  }
  if (const json* g = top.take("output")) {
    Section s(*g, "output");
    std::string format(to_string(c.output));
    s.read("format", format);
    const auto f = parse_output_format(format);
    if (!f) s.fail("format", "\"table\", \"csv\" or \"json\"");
    c.output = *f;
    s.read("path", c.output_path);
    s.finish();
  }
  top.finish();
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  return config_from_json(j);
}

std::string config_hash(const RunConfig& config) {
  RunConfig canonical = config;
  canonical.output = OutputFormat::kTable;
  canonical.output_path.clear();
  canonical.threads = 0;
  const std::string text = to_json(canonical).dump();
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::string show_sequence(const Vocab& vocab, TokenSpan seq) {
  if (vocab.single_char()) return vocab.render(seq);
  std::string out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i) out += ' ';
    out += vocab.label(seq[i]);
  }
  return out;
}

Sequence parse_sequence(const Vocab& vocab, std::string_view text) {
  Sequence out;
  if (vocab.single_char()) {
    for (char ch : text) {
      const auto id = vocab.find(std::string_view(&ch, 1));
      if (!id) throw InvariantError("unknown token '" + std::string(1, ch) + "'");
      out.push_back(*id);
    }
    return out;
  }
  std::istringstream words{std::string(text)};
  for (std::string w; words >> w;) {
    const auto id = vocab.find(w);
    if (!id) throw InvariantError("unknown token '" + w + "'");
    out.push_back(*id);
  }
  return out;
}

TableModel parse_table_model(std::istream& in, const std::optional<std::string>& eos) {
  std::optional<Vocab> vocab;
  std::map<Sequence, Dist> table;
  std::optional<Dist> fallback;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    const auto text = trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto where = "line " + std::to_string(lineno) + ": ";
    const auto fields = split(text, ',');
    if (!vocab) {
      std::vector<std::string> labels(fields.begin(), fields.end());
      for (const auto& l : labels) {
        if (l == "-" || l == "default") {
          throw ConfigError(where + "'" + l + "' is reserved and cannot be a token label");
        }
      }
      try {
        vocab.emplace(std::move(labels));
      } catch (const InvariantError& e) {
        throw ConfigError(where + e.what());
      }
      continue;
    }
    if (fields.size() != vocab->size() + 1) {
      throw ConfigError(where + "expected a prefix and " +
                        std::to_string(vocab->size()) + " probabilities");
    }
    Eigen::VectorXd probs(static_cast<Eigen::Index>(vocab->size()));
    for (std::size_t i = 1; i < fields.size(); ++i) {
      const auto f = fields[i];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw ConfigError(where + "'" + std::string(f) + "' is not a number");
      }
      probs[static_cast<Eigen::Index>(i - 1)] = value;
    }
    std::optional<Dist> dist;
    try {
      dist.emplace(std::move(probs));
    } catch (const InvariantError& e) {
      throw ConfigError(where + e.what());
    }
    const auto prefix = fields[0];
    if (prefix == "default") {
      if (fallback) throw ConfigError(where + "duplicate default row");
      fallback = std::move(*dist);
      continue;
    }
    Sequence key;
    if (prefix != "-") {
      try {
        key = parse_sequence(*vocab, prefix);
      } catch (const InvariantError& e) {
        throw ConfigError(where + e.what());
      }
    }
    if (!table.emplace(std::move(key), std::move(*dist)).second) {
      throw ConfigError(where + "duplicate prefix '" + std::string(prefix) + "'");
    }
  }
  if (!vocab) throw ConfigError("table model has no header line");
  if (!fallback) throw ConfigError("table model has no default row");
  std::optional<TokenId> eos_id;
  if (eos) {
    eos_id = vocab->find(*eos);
    if (!eos_id) throw ConfigError("eos label '" + *eos + "' is not in the vocab");
  }
  return TableModel(std::move(*vocab), std::move(table), std::move(*fallback), eos_id);
}

TableModel load_table_model(const std::string& path, const std::optional<std::string>& eos) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table model '" + path + "'");
  try {
    return parse_table_model(in, eos);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::unique_ptr<ErrorOracle> make_oracle(std::string_view error, const Vocab& vocab) {
  constexpr std::string_view kBanned = "banned:";
  if (error.substr(0, kBanned.size()) != kBanned) {
    return std::make_unique<PatternOracle>(parse_pattern_spec(error, vocab));
  }
  const auto rest = trim(error.substr(kBanned.size()));
  std::vector<std::string_view> symbols;
  if (rest.find(',') != std::string_view::npos || !vocab.single_char()) {
    if (!rest.empty()) symbols = split(rest, ',');
  } else {
    for (std::size_t i = 0; i < rest.size(); ++i) symbols.push_back(rest.substr(i, 1));
  }
  BannedSymbolSet bs;
  for (const auto s : symbols) {
    const auto id = vocab.find(s);
    if (!id) throw InvariantError("banned symbol '" + std::string(s) + "' is not in the vocab");
    bs.banned.insert(*id);
  }
  return std::make_unique<BannedSymbolOracle>(std::move(bs), vocab);
}

}  // namespace aprad::cli
