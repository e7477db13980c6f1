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

#ifndef APRAD_EVALUATION_HPP_
#define APRAD_EVALUATION_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprad/error_oracle.hpp"
#include "aprad/model.hpp"
#include "aprad/samplers.hpp"

namespace aprad {

// Probability of each full-length sequence. Absent keys have probability 0.
using SeqDist = std::map<Sequence, double>;

class AllExcludedError : public std::domain_error {
 public:
  AllExcludedError() : std::domain_error("every sequence is in the error set") {}
};

class InfiniteDivergence : public std::domain_error {
 public:
  explicit InfiniteDivergence(const std::string& what) : std::domain_error(what) {}
};

// Largest vocab^length that ideal_distribution() will enumerate.
inline constexpr std::size_t kMaxEnumeration = 10'000'000;

// Base distribution over all prompt + `length`-token sequences, restricted to
// sequences outside the error set and renormalized.
SeqDist ideal_distribution(const Model& model, const ErrorOracle& oracle,
                           std::size_t length, TokenSpan prompt = {});

SeqDist empirical_distribution(std::span<const Sequence> samples);

// KL(observed || ideal) in nats.
double kl_divergence(const SeqDist& observed, const SeqDist& ideal);

// The nine error sets of the simulated testbench, in table order.
const std::vector<std::string>& default_testbench_specs();

struct TestbenchConfig {
  std::vector<std::string> specs = default_testbench_specs();
  std::vector<Method> methods = {Method::kAsap, Method::kConstrained,
                                 Method::kAprad};
  std::size_t samples = 10000;
  std::size_t length = 3;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  std::string vocab = "ABC";
  std::size_t invocation_budget = 2000;
  // Keep one exclusion trie per (spec, method, seed) across all samples
  // instead of starting each sample from an empty one.
  bool persist_exclusions = false;
  CachePolicy cache = CachePolicy::kCurrentPath;
  // 0 picks std::thread::hardware_concurrency().
  std::size_t threads = 0;
};

// One (spec, method, seed) cell.
struct CellResult {
  double kl = 0.0;  // +inf when an output fell outside the ideal support
  std::size_t invocations = 0;
  std::size_t output_tokens = 0;
  std::size_t incomplete = 0;
  std::size_t error_outputs = 0;

  double ratio() const {
    return output_tokens == 0 ? 0.0
                              : static_cast<double>(invocations) /
                                    static_cast<double>(output_tokens);
  }
};

struct TestbenchRow {
  std::string error_set;
  Method method = Method::kAprad;
  double kl_mean = 0.0;
  double kl_sd = 0.0;
  double ratio_mean = 0.0;
  double ratio_sd = 0.0;
  std::size_t samples = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<CellResult> cells;  // one per seed, in seed order
  bool infinite_divergence = false;
};

struct TestbenchReport {
  std::vector<TestbenchRow> rows;  // spec-major, then method, in config order

  const TestbenchRow* find(const std::string& error_set, Method method) const;
  bool any_infinite_divergence() const;
};

// Runs `samples` independent episodes of `method` and scores them against
// `ideal`. Episode i draws from the stream seeded with mix_seed(seed, i), so
// different methods given the same seed see the same randomness.
CellResult run_cell(const Model& model, const ErrorOracle& oracle,
                    const SeqDist& ideal, Method method, std::size_t samples,
                    std::size_t length, std::uint64_t seed,
                    std::size_t invocation_budget, bool persist_exclusions,
                    CachePolicy cache = CachePolicy::kCurrentPath);

// Throws PatternParseError for a bad spec and AllExcludedError when a spec
// leaves nothing to sample.
TestbenchReport run_testbench(const TestbenchConfig& config);

inline constexpr const char* kReportCsvHeader =
    "error_set,method,kl_div,kl_sd,gen_ratio,ratio_sd,samples,seeds";

// CSV with kReportCsvHeader; KL to 4 decimals, ratios to 3. Seeds are
// space-separated inside one field.
void write_csv(std::ostream& out, const TestbenchReport& report);
nlohmann::ordered_json to_json(const TestbenchReport& report);
// Aligned text table, one line per error set, method columns side by side.
void write_table(std::ostream& out, const TestbenchReport& report);

}  // namespace aprad

#endif  // APRAD_EVALUATION_HPP_
