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

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "aprad/cli.hpp"

namespace aprad::cli {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

fs::path temp_file(const std::string& name, const std::string& contents) {
  const fs::path path = fs::temp_directory_path() / ("aprad_test_" + name);
  std::ofstream(path) << contents;
  return path;
}

constexpr const char* kDenseModel =
    "A,B,C,D,E\n"
    "-,0.3,0.2,0.2,0.2,0.1\n"
    "default,0.3,0.2,0.2,0.15,0.15\n";

TEST_CASE("config json round trip") {
  RunConfig c;
  CHECK(config_from_json(to_json(c)) == c);

  c.vocab = {"x", "yy", "z"};
  c.model = "table:/tmp/m.csv";
  c.eos = "z";
  c.error = "banned:x";
  c.prompt = "yy";
  c.method = Method::kConstrained;
  c.length = 17;
  c.budget = 99;
  c.stop_on_eos = false;
  c.cache = CachePolicy::kEpisode;
  c.transforms = {0.8, 20, 0.95};
  c.specs = {"", "AA"};
  c.methods = {Method::kRejection};
  c.samples = 5;
  c.persist_exclusions = true;
  c.threads = 3;
  c.seeds = {0, 18446744073709551615ULL};
  c.output = OutputFormat::kJson;
  c.output_path = "out.json";
  CHECK(config_from_json(to_json(c)) == c);
  CHECK(config_from_json(nlohmann::json::parse(to_json(c).dump())) == c);
}

TEST_CASE("config json validation") {
  using nlohmann::json;
  CHECK(config_from_json(json::object()) == RunConfig{});
  CHECK(config_from_json(json{{"generation", {{"length", 9}}}}).length == 9);
  CHECK_THROWS_AS(config_from_json(json{{"lenght", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"generation", {{"length", -1}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"generation", {{"cache", "lru"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"method", "beam"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"seeds", {1, "2"}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"output", {{"format", "xml"}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json::array()), ConfigError);
}

TEST_CASE("config hash ignores output settings") {
  RunConfig a, b;
  b.output = OutputFormat::kCsv;
  b.output_path = "x.csv";
  b.threads = 7;
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  b.samples = 11;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("table model files") {
  SUBCASE("well formed") {
    std::istringstream in(
        "# comment\n"
        "A,B,E\n"
        "-,0.5,0.25,0.25\n"
        "AB, 0.1, 0.2, 0.7\n"
        "\n"
        "default,0.2,0.2,0.6\n");
    const TableModel m = parse_table_model(in, std::string("E"));
    CHECK(m.vocab() == Vocab::from_chars("ABE"));
    CHECK(m.eos() == TokenId{2});
    CHECK(m.conditional({})[0] == 0.5);
    CHECK(m.conditional(Sequence{0, 1})[2] == doctest::Approx(0.7));
    CHECK(m.conditional(Sequence{1})[2] == doctest::Approx(0.6));
  }
  SUBCASE("multi-character labels") {
    std::istringstream in("foo,bar\nfoo bar,0.5,0.5\ndefault,1,0\n");
    const TableModel m = parse_table_model(in);
    CHECK(m.table().count(Sequence{0, 1}) == 1);
    CHECK(show_sequence(m.vocab(), Sequence{0, 1}) == "foo bar");
    CHECK(parse_sequence(m.vocab(), "foo bar") == Sequence{0, 1});
  }
  const auto bad = [](const char* text) {
    std::istringstream in(text);
    CHECK_THROWS_AS(parse_table_model(in), ConfigError);
  };
  bad("");
  bad("A,B\n-,0.5,0.5\n");                     // no default
  bad("A,B\n-,0.5,0.6\ndefault,0.5,0.5\n");     // not a distribution
  bad("A,B\n-,0.5\ndefault,0.5,0.5\n");         // short row
  bad("A,B\n-,x,1\ndefault,0.5,0.5\n");         // not a number
  bad("A,B\nC,0.5,0.5\ndefault,0.5,0.5\n");     // unknown prefix token
  bad("A,B\n-,1,0\n-,0,1\ndefault,0.5,0.5\n");  // duplicate prefix
  bad("A,-\ndefault,0.5,0.5\n");                // reserved label
  bad("A,A\ndefault,0.5,0.5\n");                // duplicate label
  std::istringstream in("A,B\ndefault,0.5,0.5\n");
  CHECK_THROWS_AS(parse_table_model(in, std::string("Z")), ConfigError);
}

TEST_CASE("oracle construction") {
  const Vocab v = Vocab::from_chars("ABC");
  const auto banned = make_oracle("banned:AC", v);
  CHECK(banned->contains(Sequence{1, 2}));
  CHECK(!banned->contains(Sequence{1, 1}));
  CHECK(make_oracle("banned:A, B", v)->contains(Sequence{1}));
  CHECK(!make_oracle("banned:", v)->contains(Sequence{0, 1, 2}));
  CHECK_THROWS_AS(make_oracle("banned:ABC", v), InvariantError);
  CHECK_THROWS_AS(make_oracle("banned:Z", v), InvariantError);
  CHECK(make_oracle("AA*", v)->contains(Sequence{0, 0, 1}));
  CHECK_THROWS_AS(make_oracle("AX", v), PatternParseError);
}

TEST_CASE("ideal command") {
  SUBCASE("AAA") {
    const auto r = invoke({"ideal", "--error", "AAA", "--output", "csv"});
    CHECK(r.code == kExitOk);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 28);
    CHECK(lines.front() == "sequence,probability");
    for (std::size_t i = 1; i < 27; ++i) {
      CHECK(lines[i].substr(lines[i].find(',') + 1) == "0.03846153846");
    }
    CHECK(lines.back().rfind("# provenance: command=ideal config_hash=", 0) == 0);
  }
  SUBCASE("empty error set, length 1") {
    const auto r = invoke({"ideal", "--error", "", "--length", "1", "--output", "csv"});
    CHECK(r.code == kExitOk);
    CHECK(lines_of(r.out).size() == 5);
    CHECK(r.out.find("\"B\",0.3333333333") != std::string::npos);
  }
  SUBCASE("everything excluded") {
    CHECK(invoke({"ideal", "--error", "***"}).code == kExitDivergence);
  }
  SUBCASE("json") {
    const auto r = invoke({"ideal", "--error", "A*", "--length", "2", "--output", "json"});
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["rows"].size() == 6);
    CHECK(j["provenance"]["command"] == "ideal");
  }
}

TEST_CASE("testbench command") {
  SUBCASE("validation") {
    CHECK(invoke({"testbench", "--samples", "0"}).code == kExitConfig);
    CHECK(invoke({"testbench", "--methods", "beam"}).code == kExitConfig);
    CHECK(invoke({"testbench", "--specs", "AXA"}).code == kExitConfig);
    CHECK(invoke({"testbench", "--specs", "***", "--samples", "10"}).code == kExitDivergence);
    CHECK(invoke({"testbench", "--model", "table:x.csv"}).code == kExitConfig);
    CHECK(invoke({"testbench", "--frobnicate"}).code == kExitConfig);
    CHECK(invoke({}).code == kExitConfig);
  }
  SUBCASE("two-row report") {
    const auto r = invoke({"testbench", "--specs", "AAA", "--methods", "aprad,constrained",
                           "--output", "json"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["rows"].size() == 2);
    CHECK(j["rows"][0]["method"] == "aprad");
    CHECK(j["rows"][0]["kl_div"].get<double>() < j["rows"][1]["kl_div"].get<double>());
    CHECK(j["provenance"]["seeds"] == nlohmann::json{1, 2, 3});
  }
  SUBCASE("spec lists and csv") {
    const auto r = invoke({"testbench", "--specs", ";AAA", "--spec", "A** except AAC",
                           "--methods", "asap", "--samples", "200", "--output", "csv"});
    REQUIRE(r.code == kExitOk);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == kReportCsvHeader);
    CHECK(lines[1].rfind("\"\",asap,", 0) == 0);
    CHECK(lines[1].find(",1.000,") != std::string::npos);
    CHECK(lines[3].rfind("\"A** except AAC\",asap,", 0) == 0);
    CHECK(lines[4].rfind("# provenance: command=testbench", 0) == 0);
  }
  SUBCASE("unconstrained sampling diverges") {
    const auto r = invoke({"testbench", "--specs", "AAA", "--methods", "unconstrained",
                           "--samples", "500"});
    CHECK(r.code == kExitDivergence);
  }
  SUBCASE("deterministic") {
    const std::vector<std::string> args{"testbench", "--samples", "300", "--seeds", "5,6",
                                        "--output", "csv"};
    CHECK(invoke(args).out == invoke(args).out);
  }
  SUBCASE("report file") {
    const fs::path path = fs::temp_directory_path() / "aprad_test_report.csv";
    const auto r = invoke({"testbench", "--specs", "AAA", "--samples", "100", "--output",
                           "csv", "-o", path.string()});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("Error Set") != std::string::npos);
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == kReportCsvHeader);
  }
}

TEST_CASE("generate command") {
  SUBCASE("empty error set gives the same output for every method") {
    std::string first;
    for (const char* m : {"unconstrained", "rejection", "constrained", "asap", "aprad"}) {
      const auto r = invoke({"generate", "--method", m, "--seed", "7", "--length", "8",
                             "--output", "json"});
      REQUIRE(r.code == kExitOk);
      const auto seq = nlohmann::json::parse(r.out)["sequence"].get<std::string>();
      CHECK(seq.size() == 8);
      if (first.empty()) first = seq;
      CHECK(seq == first);
    }
  }
  SUBCASE("dense banned symbol: asap runs out, aprad completes") {
    const fs::path model = temp_file("dense.csv", kDenseModel);
    const std::string spec = "table:" + model.string();
    int asap_budget = 0, aprad_done = 0;
    for (int seed = 1; seed <= 10; ++seed) {
      const std::string s = std::to_string(seed);
      asap_budget += invoke({"generate", "--model", spec, "--error", "banned:A", "--method",
                             "asap", "--length", "50", "--seed", s})
                         .code == kExitBudget;
      aprad_done += invoke({"generate", "--model", spec, "--error", "banned:A", "--method",
                            "aprad", "--length", "50", "--seed", s})
                        .code == kExitOk;
    }
    CHECK(asap_budget >= 8);
    CHECK(aprad_done >= 8);
  }
  SUBCASE("eos and transforms") {
    const fs::path model = temp_file("eos.csv", "A,B,E\ndefault,0.25,0.25,0.5\n");
    const std::string spec = "table:" + model.string();
    const auto r = invoke({"generate", "--model", spec, "--eos", "E", "--seed", "1",
                           "--length", "40", "--output", "json"});
    REQUIRE(r.code == kExitOk);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["tokens"].back() == "E");
    CHECK(invoke({"generate", "--model", spec, "--eos", "E", "--seed", "1", "--length", "40",
                  "--no-stop-on-eos", "--top-k", "2", "--temperature", "0.5"})
              .code == kExitOk);
    CHECK(invoke({"generate", "--eos", "E"}).code == kExitConfig);
    CHECK(invoke({"generate", "--top-p", "1.5"}).code == kExitConfig);
    CHECK(invoke({"generate", "--temperature", "0"}).code == kExitConfig);
  }
  SUBCASE("prompt") {
    const auto r = invoke({"generate", "--prompt", "CB", "--length", "2", "--seed", "3",
                           "--error", "CBA", "--output", "json"});
    REQUIRE(r.code == kExitOk);
    const auto seq = nlohmann::json::parse(r.out)["sequence"].get<std::string>();
    CHECK(seq.substr(0, 2) == "CB");
    CHECK(seq.size() == 4);
    CHECK(seq[2] != 'A');
    CHECK(invoke({"generate", "--prompt", "CBA", "--error", "CB*"}).code == kExitConfig);
    CHECK(invoke({"generate", "--prompt", "XY"}).code == kExitConfig);
  }
  SUBCASE("seed drawn from entropy is reported") {
    const auto r = invoke({"generate"});
    CHECK(r.code == kExitOk);
    CHECK(r.err.rfind("seed: ", 0) == 0);
    CHECK(invoke({"generate", "--seeds", "1,2"}).code == kExitConfig);
  }
  SUBCASE("printed config replays the run") {
    const auto printed = invoke({"generate", "--error", "A*", "--method", "constrained",
                                 "--length", "6", "--top-p", "0.9", "--print-config"});
    REQUIRE(printed.code == kExitOk);
    const fs::path cfg = temp_file("cfg.json", printed.out);
    const auto replay = invoke({"generate", "--config", cfg.string(), "--print-config"});
    CHECK(replay.out == printed.out);
    const auto a = invoke({"generate", "--config", cfg.string()});
    const auto b = invoke({"generate", "--config", cfg.string()});
    CHECK(a.code == kExitOk);
    CHECK(a.out == b.out);
    // Flags override the file.
    const auto over = invoke({"generate", "--config", cfg.string(), "--length", "2",
                              "--output", "json"});
    CHECK(nlohmann::json::parse(over.out)["output_tokens"] == 2);
  }
  SUBCASE("bad config file") {
    const fs::path cfg = temp_file("bad.json", "{\"generation\": {\"lenght\": 3}}");
    CHECK(invoke({"generate", "--config", cfg.string()}).code == kExitConfig);
    CHECK(invoke({"generate", "--config", "/nonexistent/cfg.json"}).code == kExitConfig);
  }
}

}  // namespace
}  // namespace aprad::cli
