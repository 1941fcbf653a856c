// Copyright 2026 The safevisor Authors
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

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "safevisor/config.hpp"
#include "safevisor/controllers.hpp"
#include "safevisor/error.hpp"
#include "safevisor/experiment.hpp"
#include "support/fixtures.hpp"

namespace safevisor {
namespace {

namespace fs = std::filesystem;
using testing::source_path;

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "safevisor_harness_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// small_e with its automaton path made absolute, so the text can be placed
// anywhere.
std::string small_e_text() {
  std::string text = read_file(source_path("configs/small_e.json"));
  const std::string rel = "\"../data/band_e.dfa\"";
  const auto at = text.find(rel);
  EXPECT_NE(at, std::string::npos);
  text.replace(at, rel.size(), "\"" + source_path("data/band_e.dfa").string() + "\"");
  return text;
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  if (at != std::string::npos) text.replace(at, from.size(), to);
  return text;
}

TEST(Config, LoadsBundledConfigurations) {
  const auto e = testing::quadrotor_e_config();
  EXPECT_EQ(e.horizon, 600);
  EXPECT_EQ(e.episodes, 10000u);
  EXPECT_EQ(e.game.A(0, 1), 0.1);
  EXPECT_EQ(e.relation.eps, 0.0674);
  EXPECT_TRUE(fs::exists(e.dfa_path));
  const auto n = testing::quadrotor_n_config();
  EXPECT_EQ(n.x0.size(), 2);
  EXPECT_NE(e.digest, n.digest);
}

TEST(Config, DigestIgnoresFormattingOnly) {
  const std::string text = small_e_text();
  const fs::path base = source_path("configs");
  const auto a = parse_config(text, base);
  std::string spaced;
  for (char ch : text) {
    spaced += ch;
    if (ch == ',') spaced += "  ";
  }
  EXPECT_EQ(parse_config(spaced, base).digest, a.digest);
  EXPECT_EQ(a.digest.size(), 16u);
  const auto b = parse_config(replace_once(text, "\"seed\": 7", "\"seed\": 8"), base);
  EXPECT_NE(b.digest, a.digest);
}

TEST(Config, Errors) {
  const fs::path base = source_path("configs");
  const std::string text = small_e_text();
  auto message = [&](const std::string& t) {
    try {
      parse_config(t, base);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("{").find("invalid JSON"), std::string::npos);
  EXPECT_NE(message(replace_once(text, "\"eta\"", "\"eta_\"")).find("'eta'"),
            std::string::npos);
  EXPECT_NE(message(replace_once(text, "\"eta\": 0.05", "\"eta\": 1.5")).find("eta"),
            std::string::npos);
  EXPECT_NE(message(replace_once(text, "\"kind\": \"uniform\"", "\"kind\": \"pid\""))
                .find("unknown controller kind"),
            std::string::npos);
  EXPECT_NE(message(replace_once(text, "\"episodes\": 200", "\"episodes\": 0"))
                .find("episodes"),
            std::string::npos);
  EXPECT_THROW(load_config(base / "missing.json"), ConfigError);
}

TEST(Seeds, DeriveSeedIsDeterministicAndSpread) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) {
    EXPECT_EQ(derive_seed(7, i), derive_seed(7, i));
    seen.insert(derive_seed(7, i));
  }
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(7, 0), derive_seed(8, 0));
}

TEST(Controllers, UniformControllerCoversTheBox) {
  Box box{testing::vec({-2.5}), testing::vec({2.5})};
  auto c = uniform_random_controller(box, 11);
  auto d = uniform_random_controller(box, 11);
  AugmentedState st;
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vector u = c(st);
    ASSERT_TRUE(box.contains(u));
    EXPECT_EQ(u[0], d(st)[0]);
    sum += u[0];
    sq += u[0] * u[0];
  }
  // Uniform on [-2.5, 2.5]: mean 0, variance 25 / 12.
  EXPECT_NEAR(sum / n, 0.0, 0.05);
  EXPECT_NEAR(sq / n, 25.0 / 12.0, 0.06);
}

TEST(Controllers, AdversariesStayInW) {
  Box box{testing::vec({-0.6}), testing::vec({0.6})};
  auto a = uniform_random_adversary(box, 3);
  AugmentedState st;
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(box.contains(a(st, testing::vec({0.0}))));
  EXPECT_EQ(zero_adversary(1)(st, testing::vec({1.0}))[0], 0.0);
}

TEST(Controllers, ScriptedInputs) {
  const fs::path dir = scratch("script");
  {
    std::ofstream os(dir / "inputs.txt");
    os << "# proposals\n0.5\n-1.0  # inline comment\n\n7\n";
  }
  EXPECT_THROW(load_input_script(dir / "inputs.txt", 1, 4), ConfigError);
  auto inputs = load_input_script(dir / "inputs.txt", 1, 3);
  ASSERT_EQ(inputs.size(), 3u);
  EXPECT_EQ(inputs[2][0], 7.0);
  auto c = scripted_controller(inputs);
  AugmentedState st;
  for (int k = 0; k < 3; ++k) {
    st.k = k;
    EXPECT_EQ(c(st)[0], inputs[k][0]);
  }
  st.k = 3;
  EXPECT_THROW(c(st), HorizonExceeded);
  {
    std::ofstream os(dir / "bad.txt");
    os << "0.5 x\n";
  }
  EXPECT_THROW(load_input_script(dir / "bad.txt", 1, 1), ConfigError);
  EXPECT_THROW(load_input_script(dir / "none.txt", 1, 1), ConfigError);
}

class SmallPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    pipeline_ = build_pipeline(load_config(source_path("configs/small_e.json"))).release();
  }
  static void TearDownTestSuite() {
    delete pipeline_;
    pipeline_ = nullptr;
  }
  static std::string metrics(int workers, std::size_t episodes = 60) {
    MonteCarloOptions o;
    o.episodes = episodes;
    o.workers = workers;
    std::ostringstream os;
    write_metrics_csv(monte_carlo(*pipeline_, o), os);
    return os.str();
  }
  static Pipeline* pipeline_;
};

Pipeline* SmallPipeline::pipeline_ = nullptr;

TEST_F(SmallPipeline, GuaranteeWithinBudget) {
  EXPECT_GE(pipeline_->guarantee, 0.0);
  EXPECT_LE(pipeline_->guarantee, pipeline_->config.eta);
  EXPECT_EQ(pipeline_->tables.horizon(), 20);
  EXPECT_EQ(pipeline_->grid.num_cells(), 600u);
}

TEST_F(SmallPipeline, MetricsAreDeterministic) {
  const std::string a = metrics(1);
  EXPECT_EQ(a.substr(0, a.find('\n')),
            "episode,seed,length,violated,violation_step,accepted,rejected_risk,"
            "rejected_relation,malformed_inputs,relation_violations,entered_sink,"
            "acceptance_rate");
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 61);
  EXPECT_EQ(metrics(1), a);
  EXPECT_EQ(metrics(3), a);
}

TEST_F(SmallPipeline, SummaryCounts) {
  MonteCarloOptions o;
  o.episodes = 40;
  const auto r = monte_carlo(*pipeline_, o);
  const auto& s = r.summary;
  EXPECT_EQ(s.episodes, 40u);
  ASSERT_EQ(r.episodes.size(), 40u);
  std::size_t violations = 0, decisions = 0;
  for (std::size_t i = 0; i < r.episodes.size(); ++i) {
    const auto& e = r.episodes[i];
    EXPECT_EQ(e.index, i);
    EXPECT_EQ(e.seed, derive_seed(pipeline_->config.seed, i));
    violations += e.violated;
    decisions += e.accepted + e.rejected_risk + e.rejected_relation;
  }
  EXPECT_EQ(s.violations, violations);
  EXPECT_EQ(s.decisions, decisions);
  EXPECT_EQ(s.decisions, s.accepted + s.rejected_risk + s.rejected_relation);
  EXPECT_DOUBLE_EQ(s.satisfaction_rate, 1.0 - static_cast<double>(violations) / 40);
  EXPECT_EQ(s.config_digest, pipeline_->config.digest);
  EXPECT_EQ(s.relation_violations, 0u);
}

TEST_F(SmallPipeline, SimulateEpisodeMatchesMonteCarlo) {
  MonteCarloOptions o;
  o.episodes = 5;
  const auto r = monte_carlo(*pipeline_, o);
  for (std::size_t i = 0; i < 5; ++i) {
    const EpisodeTrace t = simulate_episode(*pipeline_, RunMode::kSupervised, i);
    EXPECT_EQ(t.length, r.episodes[i].length);
    EXPECT_EQ(t.violated, r.episodes[i].violated);
    EXPECT_EQ(t.accepted, r.episodes[i].accepted);
    EXPECT_EQ(t.steps.size(), static_cast<std::size_t>(t.length));
  }
}

TEST_F(SmallPipeline, StopFlagEndsEarly) {
  std::atomic<bool> stop{true};
  MonteCarloOptions o;
  o.episodes = 50;
  o.stop = &stop;
  const auto r = monte_carlo(*pipeline_, o);
  EXPECT_TRUE(r.summary.interrupted);
  EXPECT_LT(r.episodes.size(), 50u);
}

#ifdef SAFEVISOR_CLI

struct CliRun {
  int code;
  std::string out;
};

CliRun run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "safevisor_harness_cli.log";
  const std::string cmd = std::string("\"") + SAFEVISOR_CLI + "\" " + args + " > \"" +
                          log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(log)};
}

TEST(Cli, UsageErrorsExitWithTwo) {
  EXPECT_EQ(run_cli("").code, 2);
  EXPECT_EQ(run_cli("simulate --bogus").code, 2);
  EXPECT_EQ(run_cli("simulate --config " + source_path("configs/small_e.json").string() +
                    " --companion-mode sometimes")
                .code,
            2);
  EXPECT_EQ(run_cli("simulate --config /nonexistent.json").code, 2);
}

TEST(Cli, OracleCheck) {
  const fs::path dir = scratch("oracle");
  {
    std::ofstream os(dir / "calm.json");
    os << R"({"name": "calm", "outputs": [0.0], "num_u": 2, "num_w": 2,
      "kernel": [[[[[0, 1.0]], [[0, 1.0]]], [[[0, 1.0]], [[0, 1.0]]]]],
      "dfa_file": ")"
       << source_path("data/band_e.dfa").string() << R"(", "horizon": 4, "x0": 0})";
  }
  const CliRun ok = run_cli("oracle-check --config " + (dir / "calm.json").string());
  EXPECT_EQ(ok.code, 0) << ok.out;
  EXPECT_NE(ok.out.find("PASS"), std::string::npos);

  // Escape keeps every budget but E_pv does not dominate the remaining risk
  // once later proposals are accepted too.
  const CliRun escape =
      run_cli("oracle-check " + source_path("data/toy/escape.json").string());
  EXPECT_EQ(escape.code, 1);
  EXPECT_EQ(escape.out.find(" > eta"), std::string::npos) << escape.out;
  EXPECT_NE(escape.out.find("NOT dominated"), std::string::npos);

  const CliRun bad =
      run_cli("oracle-check " + source_path("data/toy/delayed_risk.json").string());
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("worst violation 0.12109375 > eta"), std::string::npos) << bad.out;
}

TEST(Cli, SynthesizeInspectSimulate) {
  const fs::path dir = scratch("cli");
  const std::string cfg = source_path("configs/small_e.json").string();
  const CliRun kernel = run_cli("build-abstraction --config " + cfg + " --format sparse --out " +
                             (dir / "k.svkn").string());
  ASSERT_EQ(kernel.code, 0) << kernel.out;
  const CliRun info = run_cli("inspect " + (dir / "k.svkn").string());
  EXPECT_NE(info.out.find("SVKN cells 600"), std::string::npos) << info.out;

  const CliRun synth = run_cli("synthesize --config " + cfg + " --kernel " +
                            (dir / "k.svkn").string() + " --out " + (dir / "t.svvt").string());
  ASSERT_EQ(synth.code, 0) << synth.out;
  const CliRun tables = run_cli("inspect --rows 2 " + (dir / "t.svvt").string());
  EXPECT_NE(tables.out.find("SVVT rows 601"), std::string::npos) << tables.out;
  EXPECT_NE(tables.out.find("horizon 20"), std::string::npos);

  const std::string sim = "simulate --config " + cfg + " --tables " +
                          (dir / "t.svvt").string() + " --episodes 15 --seed 3 --traces 1 ";
  ASSERT_EQ(run_cli(sim + "--out " + (dir / "a").string()).code, 0);
  ASSERT_EQ(run_cli(sim + "--out " + (dir / "b").string()).code, 0);
  EXPECT_EQ(read_file(dir / "a" / "metrics.csv"), read_file(dir / "b" / "metrics.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "timing.csv"));
  EXPECT_TRUE(fs::exists(dir / "a" / "trace_0.csv"));
  EXPECT_NE(read_file(dir / "a" / "summary.txt").find("episodes            15"),
            std::string::npos);
}

TEST(Cli, RefusesBudgetBelowGuarantee) {
  const fs::path dir = scratch("refuse");
  {
    std::ofstream os(dir / "tight.json");
    os << replace_once(small_e_text(), "\"eta\": 0.05", "\"eta\": 0.0");
  }
  const CliRun r = run_cli("simulate --episodes 1 --config " + (dir / "tight.json").string() +
                        " --out " + (dir / "out").string());
  EXPECT_EQ(r.code, 3) << r.out;
  EXPECT_NE(r.out.find("refusing to run"), std::string::npos);
  const CliRun base = run_cli("simulate --baseline --episodes 3 --config " +
                           (dir / "tight.json").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(base.code, 0) << base.out;
}

#endif  // SAFEVISOR_CLI

}  // namespace
}  // namespace safevisor
