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

#include "aprad/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <memory>
#include <thread>

namespace aprad {

namespace {

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

// Sample standard deviation; 0 for fewer than two values.
double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::string fixed(double x, int decimals) {
  if (!std::isfinite(x)) return "inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, x);
  return buf;
}

double rounded(double x, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(x * scale) / scale;
}

std::string csv_quote(const std::string& field) {
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
  std::string out;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(seeds[i]);
  }
  return out;
}

std::string display_name(const std::string& error_set) {
  return error_set.empty() ? "\xE2\x88\x85" : error_set;  // U+2205
}

// Width of a UTF-8 string in code points.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

}  // namespace

SeqDist ideal_distribution(const Model& model, const ErrorOracle& oracle,
                           std::size_t length, TokenSpan prompt) {
  const std::size_t v = model.vocab().size();
  std::size_t count = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (count > kMaxEnumeration / v) {
      throw std::length_error("ideal_distribution: domain too large to enumerate");
    }
    count *= v;
  }

  SeqDist dist;
  double surviving = 0.0;
  Sequence seq(prompt.begin(), prompt.end());
  seq.resize(prompt.size() + length, 0);
  for (std::size_t n = 0; n < count; ++n) {
    if (!oracle.contains(seq)) {
      const double p = sequence_probability(model, seq, prompt.size());
      if (p > 0.0) {
        dist.emplace(seq, p);
        surviving += p;
      }
    }
    // Odometer increment over the generated positions.
    for (std::size_t i = seq.size(); i-- > prompt.size();) {
      if (++seq[i] < v) break;
      seq[i] = 0;
    }
  }
  if (surviving <= 0.0) throw AllExcludedError();
  for (auto& [s, p] : dist) p /= surviving;
  return dist;
}

SeqDist empirical_distribution(std::span<const Sequence> samples) {
  if (samples.empty()) throw std::invalid_argument("no samples");
  SeqDist dist;
  for (const auto& s : samples) dist[s] += 1.0;
  const auto n = static_cast<double>(samples.size());
  for (auto& [s, p] : dist) p /= n;
  return dist;
}

double kl_divergence(const SeqDist& observed, const SeqDist& ideal) {
  double kl = 0.0;
  for (const auto& [seq, o] : observed) {
    if (o <= 0.0) continue;
    auto it = ideal.find(seq);
    if (it == ideal.end() || it->second <= 0.0) {
      throw InfiniteDivergence("observed mass on a sequence the ideal excludes");
    }
    kl += o * std::log(o / it->second);
  }
  return kl;
}

const std::vector<std::string>& default_testbench_specs() {
  static const std::vector<std::string> specs = {
      "",
      "AAA",
      "AAA, AAC",
      "AAA, ACC",
      "AAA, CCC",
      "AAA, AAB, ABA, BAA",
      "A** except AAC",
      "*** except AAA, AAB, ABA, BAA",
      "*** except AAA, BAA",
  };
  return specs;
}

const TestbenchRow* TestbenchReport::find(const std::string& error_set,
                                          Method method) const {
  for (const auto& row : rows) {
    if (row.error_set == error_set && row.method == method) return &row;
  }
  return nullptr;
}

bool TestbenchReport::any_infinite_divergence() const {
  return std::any_of(rows.begin(), rows.end(),
                     [](const TestbenchRow& r) { return r.infinite_divergence; });
}

CellResult run_cell(const Model& model, const ErrorOracle& oracle,
                    const SeqDist& ideal, Method method, std::size_t samples,
                    std::size_t length, std::uint64_t seed,
                    std::size_t invocation_budget, bool persist_exclusions,
                    CachePolicy cache) {
  const GenerationLimits limits{length, invocation_budget, false, cache};
  std::optional<ExclusionTrie> shared;
  if (persist_exclusions) shared.emplace(model);

  CellResult cell;
  std::vector<Sequence> outputs;
  outputs.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng(mix_seed(seed, i));
    auto outcome = run_method(method, model, oracle, {}, limits, rng,
                              shared ? &*shared : nullptr);
    cell.invocations += outcome.stats.invocations;
    cell.output_tokens += outcome.stats.output_tokens;
    if (!outcome.completed) ++cell.incomplete;
    if (oracle.contains(outcome.sequence)) ++cell.error_outputs;
    outputs.push_back(std::move(outcome.sequence));
  }
  try {
    cell.kl = kl_divergence(empirical_distribution(outputs), ideal);
  } catch (const InfiniteDivergence&) {
    cell.kl = std::numeric_limits<double>::infinity();
  }
  return cell;
}

TestbenchReport run_testbench(const TestbenchConfig& config) {
  if (config.samples == 0) throw std::invalid_argument("samples must be >= 1");
  if (config.seeds.empty()) throw std::invalid_argument("need at least one seed");
  const Vocab vocab = Vocab::from_chars(config.vocab);
  const UniformModel model(vocab);

  std::vector<PatternOracle> oracles;
  std::vector<SeqDist> ideals;
  for (const auto& spec : config.specs) {
    oracles.emplace_back(parse_pattern_spec(spec, vocab));
    ideals.push_back(ideal_distribution(model, oracles.back(), config.length));
  }

  struct Job {
    std::size_t spec, method, seed;
  };
  std::vector<Job> jobs;
  for (std::size_t s = 0; s < config.specs.size(); ++s)
    for (std::size_t m = 0; m < config.methods.size(); ++m)
      for (std::size_t k = 0; k < config.seeds.size(); ++k) jobs.push_back({s, m, k});

  // Results land in job order regardless of which worker finishes first.
  std::vector<CellResult> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      results[j] = run_cell(model, oracles[job.spec], ideals[job.spec],
                            config.methods[job.method], config.samples,
                            config.length, config.seeds[job.seed],
                            config.invocation_budget, config.persist_exclusions,
                            config.cache);
    }
  };
  std::size_t threads = config.threads != 0
                            ? config.threads
                            : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  TestbenchReport report;
  std::size_t j = 0;
  for (std::size_t s = 0; s < config.specs.size(); ++s) {
    for (std::size_t m = 0; m < config.methods.size(); ++m) {
      TestbenchRow row;
      row.error_set = config.specs[s];
      row.method = config.methods[m];
      row.samples = config.samples;
      row.seeds = config.seeds;
      std::vector<double> kls, ratios;
      for (std::size_t k = 0; k < config.seeds.size(); ++k, ++j) {
        row.cells.push_back(results[j]);
        kls.push_back(results[j].kl);
        ratios.push_back(results[j].ratio());
        if (!std::isfinite(results[j].kl)) row.infinite_divergence = true;
      }
      row.kl_mean = mean(kls);
      row.kl_sd = row.infinite_divergence ? 0.0 : stddev(kls);
      row.ratio_mean = mean(ratios);
      row.ratio_sd = stddev(ratios);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_csv(std::ostream& out, const TestbenchReport& report) {
  out << kReportCsvHeader << '\n';
  for (const auto& row : report.rows) {
    out << csv_quote(row.error_set) << ',' << to_string(row.method) << ','
        << fixed(row.kl_mean, 4) << ',' << fixed(row.kl_sd, 4) << ','
        << fixed(row.ratio_mean, 3) << ',' << fixed(row.ratio_sd, 3) << ','
        << row.samples << ',' << join_seeds(row.seeds) << '\n';
  }
}

nlohmann::ordered_json to_json(const TestbenchReport& report) {
  auto number = [](double x, int decimals) -> nlohmann::ordered_json {
    if (!std::isfinite(x)) return nullptr;
    return rounded(x, decimals);
  };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["error_set"] = row.error_set;
    r["method"] = std::string(to_string(row.method));
    r["kl_div"] = number(row.kl_mean, 4);
    r["kl_sd"] = number(row.kl_sd, 4);
    r["gen_ratio"] = number(row.ratio_mean, 3);
    r["ratio_sd"] = number(row.ratio_sd, 3);
    r["samples"] = row.samples;
    r["seeds"] = row.seeds;
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json doc;
  doc["rows"] = std::move(rows);
  return doc;
}

void write_table(std::ostream& out, const TestbenchReport& report) {
  std::vector<std::string> specs;
  std::vector<Method> methods;
  for (const auto& row : report.rows) {
    if (std::find(specs.begin(), specs.end(), row.error_set) == specs.end())
      specs.push_back(row.error_set);
    if (std::find(methods.begin(), methods.end(), row.method) == methods.end())
      methods.push_back(row.method);
  }
  std::size_t name_width = std::string("Error Set").size();
  for (const auto& s : specs) name_width = std::max(name_width, display_width(display_name(s)));

  auto pad = [](const std::string& s, std::size_t width) {
    return s + std::string(width - std::min(width, display_width(s)), ' ');
  };
  constexpr std::size_t kCol = 8;
  out << pad("", name_width);
  for (Method m : methods) out << " | " << pad(std::string(to_string(m)), 2 * kCol + 1);
  out << '\n' << pad("Error Set", name_width);
  for (std::size_t i = 0; i < methods.size(); ++i)
    out << " | " << pad("KL-div", kCol) << ' ' << pad("Ratio", kCol);
  out << '\n' << std::string(name_width + methods.size() * (2 * kCol + 4), '-') << '\n';
  for (const auto& s : specs) {
    out << pad(display_name(s), name_width);
    for (Method m : methods) {
      const TestbenchRow* row = report.find(s, m);
      out << " | "
          << pad(row ? fixed(row->kl_mean, 4) : "", kCol) << ' '
          << pad(row ? fixed(row->ratio_mean, 3) : "", kCol);
    }
    out << '\n';
  }
}

}  // namespace aprad
