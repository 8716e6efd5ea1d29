#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "bpref/harness.hpp"
#include "bpref/random.hpp"

using namespace bpref;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bpref_test_harness_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A run small enough for unit tests.
ExperimentConfig tiny(const fs::path& out, std::vector<std::string> extra = {}) {
  json j = to_json(ExperimentConfig{});
  for (const char* kv :
       {"total_steps=1200", "exploration.pretrain_steps=300", "exploration.random_steps=100",
        "feedback_period=300", "eval_period=300", "eval_episodes=1", "budget=6", "queries_per_session=2",
        "reward_model.epochs=3", "reward_model.hidden=[16]", "sac.hidden=[16,16]", "sac.batch_size=32",
        "ppo.hidden=[16,16]", "ppo.rollout_steps=100", "alignment_episodes=1", "seeds=[0,1]"}) {
    apply_override(j, kv);
  }
  for (const auto& kv : extra) apply_override(j, kv);
  ExperimentConfig c = experiment_from_json(j);
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("override parsing") {
  json j = {{"a", {{"b", 1}}}, {"name", "x"}};
  apply_override(j, "a.b=2.5");
  CHECK(j["a"]["b"] == 2.5);
  apply_override(j, "name=point_mass");
  CHECK(j["name"] == "point_mass");
  apply_override(j, "a.list=[1,2]");
  CHECK(j["a"]["list"] == json::array({1, 2}));
  apply_override(j, "flag=true");
  CHECK(j["flag"] == true);
  apply_override(j, "text=a=b");
  CHECK(j["text"] == "a=b");
  CHECK_THROWS(apply_override(j, "novalue"));
  CHECK_THROWS(apply_override(j, "=3"));
}

TEST_CASE("config JSON round trip and strict keys") {
  ExperimentConfig c;
  c.train.env = "push";
  c.train.algo = Algo::kPrefPpo;
  c.teacher_preset = "mistake";
  c.teacher_overrides = {{"epsilon_mistake", 0.2}};
  c.seeds = {4, 9};
  c.sweep.budgets = {50, 100};
  c.train.sampler.scheme = SamplingScheme::kEntropy;
  const json j = to_json(c);
  const ExperimentConfig back = experiment_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.train_config(9).teacher.epsilon_mistake == 0.2);
  CHECK(back.train_config(9).seed == 9);
  CHECK(back.train_config(9).sampler.n_query == c.train.queries_per_session);
  CHECK(to_json(ExperimentConfig{})["teacher"]["overrides"].empty());

  json bad = j;
  bad["budgit"] = 5;
  CHECK_THROWS(experiment_from_json(bad));
  bad = j;
  bad["sac"]["alpah"] = 0.2;
  CHECK_THROWS(experiment_from_json(bad));
  bad = j;
  bad["teacher"]["overrides"] = {{"betta", 1.0}};
  CHECK_THROWS(experiment_from_json(bad));
  bad = j;
  bad["algo"] = "dqn";
  CHECK_THROWS(experiment_from_json(bad));

  // Oracle beta survives serialization.
  const json inf = to_json(ExperimentConfig{});
  CHECK(std::isinf(experiment_from_json(inf).train_config(0).teacher.beta));

  ExperimentConfig invalid;
  invalid.seeds.clear();
  CHECK_THROWS(invalid.validate());
  invalid = ExperimentConfig{};
  invalid.teacher_preset = "perfect";
  CHECK_THROWS(invalid.validate());
}

TEST_CASE("config file with overrides") {
  const fs::path dir = scratch("load");
  fs::create_directories(dir);
  std::ofstream(dir / "c.json") << R"({"env": "pendulum", "budget": 40})";
  const ExperimentConfig c = load_experiment(dir / "c.json", {"budget=60", "teacher.preset=stoc"});
  CHECK(c.train.env == "pendulum");
  CHECK(c.train.budget == 60);
  CHECK(c.teacher_preset == "stoc");
  CHECK_THROWS(load_experiment(dir / "missing.json", {}));
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS(load_experiment(dir / "broken.json", {}));
}

TEST_CASE("output root resolution") {
  unsetenv(kOutputEnvVar);
  CHECK(resolve_output_root("") == fs::path("runs"));
  setenv(kOutputEnvVar, "/tmp/from_env", 1);
  CHECK(resolve_output_root("") == fs::path("/tmp/from_env"));
  CHECK(resolve_output_root("explicit") == fs::path("explicit"));
  unsetenv(kOutputEnvVar);
  CHECK(run_directory("out", "point_mass", "pebble", "oracle", 3) ==
        fs::path("out/point_mass/pebble/oracle/seed_3"));
}

TEST_CASE("run writes the layout and reruns are identical") {
  const fs::path out = scratch("run");
  const auto first = run_experiment(tiny(out));
  REQUIRE(first.size() == 2);
  for (std::uint64_t seed : {0u, 1u}) {
    const fs::path dir = run_directory(out, "point_mass", "pebble", "oracle", seed);
    for (const char* f : {"curve.csv", "records.jsonl", "config.snapshot", "summary.json"}) {
      CHECK(fs::exists(dir / f));
    }
    const std::string curve = slurp(dir / "curve.csv");
    CHECK(curve.rfind(std::string(kCurveHeader) + "\n", 0) == 0);
    const json summary = json::parse(slurp(dir / "summary.json"));
    CHECK(summary["seed"] == seed);
    CHECK(summary["queries_used"] == 6);
    CHECK(summary["teacher"] == "oracle");
    CHECK(summary["score_kind"] == "return");
    // The snapshot alone reproduces the run.
    const ExperimentConfig snap = experiment_from_json(json::parse(slurp(dir / "config.snapshot")));
    CHECK(snap.seeds == std::vector<std::uint64_t>{seed});
    std::ifstream records(dir / "records.jsonl");
    int lines = 0;
    for (std::string line; std::getline(records, line);) {
      query_log_from_json_line(line);
      ++lines;
    }
    CHECK(lines == 6);
  }

  const fs::path again = scratch("run_again");
  ExperimentConfig c = tiny(again);
  c.workers = 2;
  run_experiment(c);
  for (std::uint64_t seed : {0u, 1u}) {
    for (const char* f : {"curve.csv", "records.jsonl", "summary.json"}) {
      CHECK(slurp(run_directory(out, "point_mass", "pebble", "oracle", seed) / f) ==
            slurp(run_directory(again, "point_mass", "pebble", "oracle", seed) / f));
    }
  }
}

TEST_CASE("unwritable output is rejected before training") {
  const fs::path out = scratch("blocked");
  std::ofstream(out) << "a file, not a directory";
  CHECK_THROWS(run_experiment(tiny(out)));
  fs::remove(out);
}

TEST_CASE("sweep covers every teacher and seed") {
  const fs::path out = scratch("sweep");
  ExperimentConfig c = tiny(out, {"total_steps=900", "budget=4"});
  c.workers = 2;
  const AggregateReport report = sweep_robustness(c);
  std::set<std::string> teachers;
  int runs = 0;
  for (const auto& entry : fs::recursive_directory_iterator(out)) {
    if (entry.path().filename() != "summary.json") continue;
    ++runs;
    teachers.insert(entry.path().parent_path().parent_path().filename().string());
  }
  CHECK(runs == 6 * 2 + 2);
  CHECK(teachers.size() == 7);  // six presets plus the baseline's "none"
  // One cell per teacher plus the baseline, which normalizes to itself.
  CHECK(report.cells.size() == 7);
  for (const auto& cell : report.cells) {
    CHECK(cell.scores.size() == 2);
    CHECK(cell.algo == (cell.teacher == "none" ? "sac_gt" : "pebble"));
  }
  CHECK(fs::exists(out / "report.json"));
  CHECK(fs::exists(out / "report.csv"));
  const AggregateReport again = aggregate_directory(out, c.sweep.bootstrap_resamples, derive_seed(0, "report"));
  CHECK(to_json(again) == to_json(report));
  CHECK(report_from_json(json::parse(slurp(out / "report.json"))).cells.size() == 7);

  std::ostringstream table;
  write_curve_table(table, out);
  CHECK(table.str().rfind("env,algo,teacher,budget,seed,step", 0) == 0);
}

TEST_CASE("multiple budgets get their own directories") {
  const fs::path out = scratch("budgets");
  ExperimentConfig c = tiny(out, {"total_steps=900", "seeds=[0]", "sweep.teachers=[\"oracle\"]",
                                  "sweep.budgets=[2,4]"});
  const AggregateReport report = sweep_robustness(c);
  CHECK(fs::exists(out / "budget_2/point_mass/pebble/oracle/seed_0/summary.json"));
  CHECK(fs::exists(out / "budget_4/point_mass/pebble/oracle/seed_0/summary.json"));
  CHECK(report.cells.size() == 3);
  CHECK(report.find("point_mass", "oracle", "pebble", 4) != nullptr);
}

TEST_CASE("label statistics") {
  const fs::path out = scratch("labels");
  run_experiment(tiny(out, {"seeds=[0]"}));
  run_experiment(tiny(out, {"seeds=[0]", "teacher.preset=equal", "teacher.overrides={\"adaptive\":\"none\",\"delta_equal\":1e9}"}));
  const auto stats = label_stats(out);
  REQUIRE(stats.size() == 2);
  for (const auto& s : stats) {
    CHECK(s.queries == 6);
    CHECK(s.skip_fraction == 0.0);
    if (s.run.find("oracle") != std::string::npos) {
      CHECK(s.equal_fraction == 0.0);
      REQUIRE(s.flip_estimate.has_value());
      CHECK(*s.flip_estimate == 0.0);
    } else {
      CHECK(s.equal_fraction == 1.0);
      CHECK_FALSE(s.flip_estimate.has_value());
    }
  }
  CHECK(to_json(stats[0]).contains("skip_fraction"));

  // Mistake teacher over 10k labels.
  Rng rng(11);
  SimTeacher mistake(teacher_preset("mistake"));
  std::vector<QueryLog> log;
  for (int i = 0; i < 10000; ++i) {
    Segment a;
    Segment b;
    for (Segment* s : {&a, &b}) {
      s->states = Eigen::MatrixXd::Zero(1, 3);
      s->actions = Eigen::MatrixXd::Zero(1, 3);
      s->rewards = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.uniform(); });
    }
    QueryLog q;
    q.label = mistake.label(a, b, {0.0, 3, 100});
    q.sum0 = q.discounted0 = a.true_return();
    q.sum1 = q.discounted1 = b.true_return();
    log.push_back(q);
  }
  const LabelStats ms = label_stats_from_log("mistake", log);
  REQUIRE(ms.flip_estimate.has_value());
  CHECK(*ms.flip_estimate >= 0.09);
  CHECK(*ms.flip_estimate <= 0.11);
  CHECK(label_stats_from_log("empty", {}).queries == 0);
}
