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

// Command-line front end: run configuration, its JSON form, table-model
// files, and the testbench / generate / ideal commands.

#ifndef APRAD_CLI_HPP_
#define APRAD_CLI_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aprad/error_oracle.hpp"
#include "aprad/evaluation.hpp"
#include "aprad/model.hpp"
#include "aprad/samplers.hpp"

namespace aprad::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitRuntime = 1,         // I/O and other unexpected failures
  kExitConfig = 2,          // bad flags, config file, model file or spec
  kExitDivergence = 3,      // infinite KL, or nothing left to sample
  kExitBudget = 4,          // generate ran out of invocations
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class OutputFormat { kTable, kCsv, kJson };

std::string_view to_string(OutputFormat format);
std::optional<OutputFormat> parse_output_format(std::string_view name);
std::string_view to_string(CachePolicy policy);
std::optional<CachePolicy> parse_cache_policy(std::string_view name);

struct RunConfig {
  // Empty means {A, B, C} for the uniform model and the file header for a
  // table model.
  std::vector<std::string> vocab;
  std::string model = "uniform";  // "uniform" or "table:<path>"
  std::optional<std::string> eos;
  std::string error;              // pattern spec or "banned:<symbols>"
  std::string prompt;
  Method method = Method::kAprad;

  std::size_t length = 3;
  std::size_t budget = 2000;
  bool stop_on_eos = true;
  CachePolicy cache = CachePolicy::kCurrentPath;
  SamplingTransforms transforms;

  std::vector<std::string> specs = default_testbench_specs();
  std::vector<Method> methods = {Method::kAsap, Method::kConstrained,
                                 Method::kAprad};
  std::size_t samples = 10000;
  bool persist_exclusions = false;
  std::size_t threads = 0;

  // Empty means {1, 2, 3} for the testbench and one entropy seed for
  // generate.
  std::vector<std::uint64_t> seeds;

  OutputFormat output = OutputFormat::kTable;
  std::string output_path;

  bool operator==(const RunConfig&) const = default;
};

// Nested sections: generation, sampling, testbench, output. Unknown keys
// and ill-typed values raise ConfigError; missing keys keep their defaults.
nlohmann::ordered_json to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& json);
RunConfig load_config_file(const std::string& path);

// FNV-1a over the canonical JSON of everything that affects results
// (output settings and thread count excluded), as 16 hex digits.
std::string config_hash(const RunConfig& config);

// Table-model text format:
//   A,B,C              header: vocab labels
//   -,0.5,0.25,0.25    empty prefix
//   AB,0.1,0.2,0.7     prefix "AB"
//   default,...        required fallback row
// Blank lines and lines starting with '#' are skipped. With multi-character
// labels, prefix tokens are separated by spaces.
TableModel parse_table_model(std::istream& in,
                             const std::optional<std::string>& eos = {});
TableModel load_table_model(const std::string& path,
                            const std::optional<std::string>& eos = {});

// "banned:<symbols>" (characters, or comma-separated labels) or a pattern
// spec. Throws PatternParseError or InvariantError.
std::unique_ptr<ErrorOracle> make_oracle(std::string_view error,
                                         const Vocab& vocab);

// Renders with labels concatenated when they are single characters and
// space-separated otherwise; parse_sequence() inverts it.
std::string show_sequence(const Vocab& vocab, TokenSpan seq);
Sequence parse_sequence(const Vocab& vocab, std::string_view text);

// Entry point. args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace aprad::cli

#endif  // APRAD_CLI_HPP_
