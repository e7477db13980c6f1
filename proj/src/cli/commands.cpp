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

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "aprad/cli.hpp"

namespace aprad::cli {
namespace {

using nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

enum class Command { kTestbench, kGenerate, kIdeal };

const char* command_name(Command c) {
  switch (c) {
    case Command::kTestbench: return "testbench";
    case Command::kGenerate: return "generate";
    case Command::kIdeal: return "ideal";
  }
  return "";
}

// Raw flag values; only flags the user actually passed are applied.
struct Flags {
  std::string config_path;
  std::string vocab, model, eos, error, prompt, method, cache, output, output_path;
  std::vector<std::string> specs, methods;
  std::vector<std::uint64_t> seeds;
  std::size_t length = 0, budget = 0, samples = 0, threads = 0, top_k = 0;
  double temperature = 0.0, top_p = 0.0;
  bool persist = false, no_stop_on_eos = false, print_config = false;
};

void add_shared_options(CLI::App& sub, Flags& f, Command command) {
  sub.add_option("--config", f.config_path, "JSON run configuration; flags override it");
  sub.add_option("--vocab", f.vocab, "token labels: one per character, or comma-separated");
  sub.add_option("--model", f.model, "uniform, or table:<path>");
  sub.add_option("--seed,--seeds", f.seeds, "RNG seed(s), comma-separated")->delimiter(',');
  sub.add_option("--length", f.length,
                 command == Command::kGenerate ? "maximum tokens to generate"
                                               : "sequence length");
  sub.add_option("--budget", f.budget, "model invocation budget per episode");
  sub.add_option("--cache", f.cache, "invocation accounting: path or episode");
  sub.add_option("--output", f.output, "table, csv or json");
  sub.add_option("-o,--output-path", f.output_path, "write the report to this file");
  sub.add_flag("--print-config", f.print_config, "print the resolved configuration and exit");
  if (command == Command::kTestbench) {
    sub.add_option("--specs,--spec", f.specs,
                   "error-set specs, ';'-separated (repeatable); \"\" is the empty set");
    sub.add_option("--methods", f.methods, "comma-separated methods")->delimiter(',');
    sub.add_option("--samples", f.samples, "episodes per (spec, method, seed) cell");
    sub.add_option("--threads", f.threads, "worker threads, 0 for all cores");
    sub.add_flag("--persist-exclusions", f.persist, "share one exclusion trie per cell");
    return;
  }
  sub.add_option("--eos", f.eos, "end-of-sequence label (table models)");
  sub.add_option("--error", f.error, "pattern spec or banned:<symbols>");
  sub.add_option("--prompt", f.prompt, "prompt tokens");
  sub.add_option("--temperature", f.temperature, "sampling temperature");
  sub.add_option("--top-k", f.top_k, "keep the k most likely tokens");
  sub.add_option("--top-p", f.top_p, "nucleus mass");
  if (command == Command::kGenerate) {
    sub.add_option("--method", f.method,
                   "unconstrained, rejection, constrained, asap or aprad");
    sub.add_flag("--no-stop-on-eos", f.no_stop_on_eos, "keep generating after EOS");
  }
}

std::vector<std::string> parse_vocab_flag(const std::string& text) {
  std::vector<std::string> labels;
  if (text.find(',') != std::string::npos) {
    std::istringstream in(text);
    for (std::string item; std::getline(in, item, ',');) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      labels.push_back(b == std::string::npos ? "" : item.substr(b, e - b + 1));
    }
  } else {
    for (char ch : text) labels.emplace_back(1, ch);
  }
  return labels;
}

RunConfig build_config(const CLI::App& sub, const Flags& f) {
  RunConfig c = f.config_path.empty() ? RunConfig{} : load_config_file(f.config_path);
  const auto given = [&](const char* name) {
    const CLI::Option* opt = sub.get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
  };
  if (given("--vocab")) c.vocab = parse_vocab_flag(f.vocab);
  if (given("--model")) c.model = f.model;
  if (given("--seed")) c.seeds = f.seeds;
  if (given("--length")) c.length = f.length;
  if (given("--budget")) c.budget = f.budget;
  if (given("--cache")) {
    const auto policy = parse_cache_policy(f.cache);
    if (!policy) throw ConfigError("--cache must be path or episode");
    c.cache = *policy;
  }
  if (given("--output")) {
    const auto format = parse_output_format(f.output);
    if (!format) throw ConfigError("--output must be table, csv or json");
    c.output = *format;
  }
  if (given("--output-path")) c.output_path = f.output_path;
  if (given("--specs")) {
    c.specs.clear();
    for (const auto& raw : f.specs) {
      std::size_t start = 0;
      for (;;) {
        const auto pos = raw.find(';', start);
        std::string spec = raw.substr(start, pos - start);
        const auto b = spec.find_first_not_of(" \t");
        c.specs.push_back(b == std::string::npos
                              ? ""
                              : spec.substr(b, spec.find_last_not_of(" \t") - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
      }
    }
  }
  if (given("--methods")) {
    c.methods.clear();
    for (const auto& m : f.methods) {
      const auto method = parse_method(m);
      if (!method) throw ConfigError("unknown method '" + m + "'");
      c.methods.push_back(*method);
    }
  }
  if (given("--samples")) c.samples = f.samples;
  if (given("--threads")) c.threads = f.threads;
  if (given("--persist-exclusions")) c.persist_exclusions = f.persist;
  if (given("--eos")) c.eos = f.eos;
  if (given("--error")) c.error = f.error;
  if (given("--prompt")) c.prompt = f.prompt;
  if (given("--temperature")) c.transforms.temperature = f.temperature;
  if (given("--top-k")) c.transforms.top_k = f.top_k;
  if (given("--top-p")) c.transforms.top_p = f.top_p;
  if (given("--method")) {
    const auto method = parse_method(f.method);
    if (!method) throw ConfigError("unknown method '" + f.method + "'");
    c.method = *method;
  }
  if (given("--no-stop-on-eos")) c.stop_on_eos = !f.no_stop_on_eos;
  return c;
}

void validate(const RunConfig& c, Command command) {
  if (c.budget == 0) throw ConfigError("budget must be positive");
  const auto& t = c.transforms;
  if (t.temperature && !(*t.temperature > 0.0)) throw ConfigError("temperature must be positive");
  if (t.top_k && *t.top_k == 0) throw ConfigError("top_k must be positive");
  if (t.top_p && !(*t.top_p > 0.0 && *t.top_p <= 1.0)) {
    throw ConfigError("top_p must be in (0, 1]");
  }
  if (c.model != "uniform" && c.model.rfind("table:", 0) != 0) {
    throw ConfigError("model must be 'uniform' or 'table:<path>'");
  }
  if (c.eos && c.model == "uniform") throw ConfigError("eos needs a table model");
  switch (command) {
    case Command::kTestbench:
      if (c.samples == 0) throw ConfigError("samples must be positive");
      if (c.length == 0) throw ConfigError("length must be positive");
      if (c.specs.empty()) throw ConfigError("no error-set specs");
      if (c.methods.empty()) throw ConfigError("no methods");
      if (c.model != "uniform" || !t.empty()) {
        throw ConfigError("the testbench runs on the uniform model without transforms");
      }
      break;
    case Command::kGenerate:
      if (c.seeds.size() > 1) throw ConfigError("generate takes a single seed");
      break;
    case Command::kIdeal:
      break;
  }
}

std::shared_ptr<const Model> build_model(const RunConfig& c) {
  std::shared_ptr<const Model> model;
  if (c.model == "uniform") {
    model = std::make_shared<UniformModel>(
        c.vocab.empty() ? Vocab::from_chars("ABC") : Vocab(c.vocab));
  } else {
    auto table = std::make_shared<TableModel>(load_table_model(c.model.substr(6), c.eos));
    if (!c.vocab.empty() && Vocab(c.vocab) != table->vocab()) {
      throw ConfigError("vocab does not match the table model header");
    }
    model = std::move(table);
  }
  if (!c.transforms.empty()) {
    model = std::make_shared<TransformedModel>(std::move(model), c.transforms);
  }
  return model;
}

std::string seeds_text(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string footer(Command command, const RunConfig& c) {
  return std::string("# provenance: command=") + command_name(command) +
         " config_hash=" + config_hash(c) + " seeds=" + seeds_text(c.seeds) +
         " version=" + kVersion;
}

ordered_json provenance_json(Command command, const RunConfig& c) {
  ordered_json p;
  p["command"] = command_name(command);
  p["config_hash"] = config_hash(c);
  p["seeds"] = c.seeds;
  p["version"] = kVersion;
  return p;
}

std::string fmt(const char* format, double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, value);
  return buf;
}

// Where csv/json reports go: the output path if set, otherwise stdout.
class ReportSink {
 public:
  ReportSink(const std::string& path, std::ostream& out) : out_(&out) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open output file '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

int cmd_testbench(const RunConfig& c, std::ostream& out, std::ostream& err) {
  TestbenchConfig tb;
  tb.specs = c.specs;
  tb.methods = c.methods;
  tb.samples = c.samples;
  tb.length = c.length;
  tb.seeds = c.seeds;
  const Vocab vocab = c.vocab.empty() ? Vocab::from_chars("ABC") : Vocab(c.vocab);
  if (!vocab.single_char()) throw ConfigError("testbench vocab labels must be single characters");
  tb.vocab = vocab.render([&] {
    Sequence all(vocab.size());
    for (TokenId t = 0; t < all.size(); ++t) all[t] = t;
    return all;
  }());
  tb.invocation_budget = c.budget;
  tb.persist_exclusions = c.persist_exclusions;
  tb.cache = c.cache;
  tb.threads = c.threads;

  const TestbenchReport report = run_testbench(tb);
  const std::string foot = footer(Command::kTestbench, c);
  if (c.output == OutputFormat::kTable || !c.output_path.empty()) {
    std::ostringstream table;
    write_table(table, report);
    if (c.output == OutputFormat::kTable && !c.output_path.empty()) {
      ReportSink sink(c.output_path, out);
      sink.stream() << table.str() << foot << '\n';
    }
    out << table.str() << foot << '\n';
  }
  if (c.output == OutputFormat::kCsv) {
    ReportSink sink(c.output_path, out);
    write_csv(sink.stream(), report);
    sink.stream() << foot << '\n';
  } else if (c.output == OutputFormat::kJson) {
    ReportSink sink(c.output_path, out);
    auto j = to_json(report);
    j["provenance"] = provenance_json(Command::kTestbench, c);
    sink.stream() << j.dump(2) << '\n';
  }
  if (report.any_infinite_divergence()) {
    err << "error: a method emitted a sequence outside the ideal support (infinite KL)\n";
    return kExitDivergence;
  }
  return kExitOk;
}

int cmd_generate(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto model = build_model(c);
  const Vocab& vocab = model->vocab();
  const auto oracle = make_oracle(c.error, vocab);
  const Sequence prompt = parse_sequence(vocab, c.prompt);
  for (std::size_t i = 0; i <= prompt.size(); ++i) {
    if (oracle->contains(TokenSpan(prompt).first(i))) {
      throw ConfigError("the prompt is already in the error set");
    }
  }
  Rng rng(c.seeds.front());
  const GenerationLimits limits{c.length, c.budget, c.stop_on_eos, c.cache};
  const GenerationOutcome o = run_method(c.method, *model, *oracle, prompt, limits, rng);
  const auto& s = o.stats;
  const bool is_error = oracle->contains(o.sequence);

  ReportSink sink(c.output_path, out);
  std::ostream& os = sink.stream();
  const std::string text = show_sequence(vocab, o.sequence);
  switch (c.output) {
    case OutputFormat::kTable: {
      const auto row = [&](const char* key, const std::string& value) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%-18s", key);
        os << buf << value << '\n';
      };
      row("method", std::string(to_string(c.method)));
      row("sequence", text);
      row("completed", o.completed ? "true" : "false");
      row("is_error", is_error ? "true" : "false");
      row("invocations", std::to_string(s.invocations));
      row("tokens", std::to_string(s.output_tokens));
      row("ratio", fmt("%.3f", s.generation_ratio()));
      row("errors_discovered", std::to_string(s.errors_discovered));
      row("backtracks", std::to_string(s.backtracks));
      row("attempts", std::to_string(s.attempts));
      row("budget_exhausted", s.budget_exhausted ? "true" : "false");
      os << footer(Command::kGenerate, c) << '\n';
      break;
    }
    case OutputFormat::kCsv:
      os << "method,sequence,completed,is_error,invocations,tokens,ratio,"
            "errors_discovered,backtracks,attempts,budget_exhausted\n"
         << to_string(c.method) << ",\"" << text << "\"," << o.completed << ','
         << is_error << ',' << s.invocations << ',' << s.output_tokens << ','
         << fmt("%.3f", s.generation_ratio()) << ',' << s.errors_discovered << ','
         << s.backtracks << ',' << s.attempts << ',' << s.budget_exhausted << '\n'
         << footer(Command::kGenerate, c) << '\n';
      break;
    case OutputFormat::kJson: {
      ordered_json j;
      j["method"] = std::string(to_string(c.method));
      j["sequence"] = text;
      j["tokens"] = ordered_json::array();
      for (TokenId t : o.sequence) j["tokens"].push_back(vocab.label(t));
      j["completed"] = o.completed;
      j["is_error"] = is_error;
      j["invocations"] = s.invocations;
      j["output_tokens"] = s.output_tokens;
      j["ratio"] = std::round(s.generation_ratio() * 1000.0) / 1000.0;
      j["errors_discovered"] = s.errors_discovered;
      j["backtracks"] = s.backtracks;
      j["attempts"] = s.attempts;
      j["budget_exhausted"] = s.budget_exhausted;
      j["provenance"] = provenance_json(Command::kGenerate, c);
      os << j.dump(2) << '\n';
      break;
    }
  }
  if (o.completed) return kExitOk;
  if (s.budget_exhausted) {
    err << "error: invocation budget exhausted before completion\n";
    return kExitBudget;
  }
  err << "error: every continuation of the prompt is an error\n";
  return kExitDivergence;
}

int cmd_ideal(const RunConfig& c, std::ostream& out) {
  const auto model = build_model(c);
  const Vocab& vocab = model->vocab();
  const auto oracle = make_oracle(c.error, vocab);
  const Sequence prompt = parse_sequence(vocab, c.prompt);
  const SeqDist ideal = ideal_distribution(*model, *oracle, c.length, prompt);

  ReportSink sink(c.output_path, out);
  std::ostream& os = sink.stream();
  switch (c.output) {
    case OutputFormat::kCsv:
      os << "sequence,probability\n";
      for (const auto& [seq, p] : ideal) {
        os << '"' << show_sequence(vocab, seq) << "\"," << fmt("%.10g", p) << '\n';
      }
      os << footer(Command::kIdeal, c) << '\n';
      break;
    case OutputFormat::kTable: {
      std::size_t width = 8;
      for (const auto& [seq, p] : ideal) width = std::max(width, show_sequence(vocab, seq).size());
      const auto pad = [&](std::string s) { return s.append(width + 2 - s.size(), ' '); };
      os << pad("sequence") << "probability\n";
      for (const auto& [seq, p] : ideal) {
        os << pad(show_sequence(vocab, seq)) << fmt("%.10g", p) << '\n';
      }
      os << footer(Command::kIdeal, c) << '\n';
      break;
    }
    case OutputFormat::kJson: {
      ordered_json j;
      j["rows"] = ordered_json::array();
      for (const auto& [seq, p] : ideal) {
        j["rows"].push_back({{"sequence", show_sequence(vocab, seq)}, {"probability", p}});
      }
      j["provenance"] = provenance_json(Command::kIdeal, c);
      os << j.dump(2) << '\n';
      break;
    }
  }
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app("Error-free sampling from autoregressive models", "aprad");
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Flags flags;
  CLI::App* testbench = app.add_subcommand("testbench", "run the simulated testbench");
  CLI::App* generate = app.add_subcommand("generate", "generate one sequence");
  CLI::App* ideal = app.add_subcommand("ideal", "print the exact ideal distribution");
  add_shared_options(*testbench, flags, Command::kTestbench);
  add_shared_options(*generate, flags, Command::kGenerate);
  add_shared_options(*ideal, flags, Command::kIdeal);

  std::vector<std::string> storage{"aprad"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& s : storage) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const auto [sub, command] =
      testbench->parsed() ? std::pair{testbench, Command::kTestbench}
      : generate->parsed() ? std::pair{generate, Command::kGenerate}
                           : std::pair{ideal, Command::kIdeal};
  try {
    RunConfig config = build_config(*sub, flags);
    validate(config, command);
    // Fill in defaulted seeds so that reports and printed configs replay.
    if (config.seeds.empty() && command == Command::kTestbench) config.seeds = {1, 2, 3};
    if (config.seeds.empty() && command == Command::kGenerate) {
      std::random_device rd;
      config.seeds = {(static_cast<std::uint64_t>(rd()) << 32) | rd()};
      err << "seed: " << config.seeds.front() << " (drawn from entropy)\n";
    }
    if (flags.print_config) {
      out << to_json(config).dump(2) << '\n';
      return kExitOk;
    }
    switch (command) {
      case Command::kTestbench: return cmd_testbench(config, out, err);
      case Command::kGenerate: return cmd_generate(config, out, err);
      case Command::kIdeal: return cmd_ideal(config, out);
    }
  } catch (const PatternParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const AllExcludedError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {  // InvariantError and friends
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::length_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}

}  // namespace aprad::cli
