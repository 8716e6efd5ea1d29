#include "bpref/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <tuple>

namespace bpref {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

json beta_json(double beta) { return std::isinf(beta) ? json("inf") : json(beta); }

double beta_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return kInfiniteBeta;
    throw std::invalid_argument("teacher.beta: expected a number or \"inf\", got " + s);
  }
  return j.get<double>();
}

std::string adaptive_name(AdaptiveThreshold a) {
  switch (a) {
    case AdaptiveThreshold::kSkip:
      return "skip";
    case AdaptiveThreshold::kEqual:
      return "equal";
    case AdaptiveThreshold::kNone:
      break;
  }
  return "none";
}

AdaptiveThreshold adaptive_from_name(const std::string& s) {
  if (s == "none") return AdaptiveThreshold::kNone;
  if (s == "skip") return AdaptiveThreshold::kSkip;
  if (s == "equal") return AdaptiveThreshold::kEqual;
  throw std::invalid_argument("unknown adaptive threshold: " + s);
}

json teacher_json(const TeacherConfig& t) {
  return {{"beta", beta_json(t.beta)},
          {"gamma", t.gamma},
          {"epsilon_mistake", t.epsilon_mistake},
          {"delta_skip", t.delta_skip},
          {"delta_equal", t.delta_equal},
          {"adaptive", adaptive_name(t.adaptive)},
          {"epsilon_adapt", t.epsilon_adapt},
          {"return_window", t.return_window}};
}

void apply_teacher_json(const json& j, TeacherConfig& t) {
  const json known = teacher_json(t);
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw std::invalid_argument("unknown teacher field: " + key);
  }
  if (j.contains("beta")) t.beta = beta_from_json(j.at("beta"));
  read(j, "gamma", t.gamma);
  read(j, "epsilon_mistake", t.epsilon_mistake);
  read(j, "delta_skip", t.delta_skip);
  read(j, "delta_equal", t.delta_equal);
  if (j.contains("adaptive")) t.adaptive = adaptive_from_name(j.at("adaptive").get<std::string>());
  read(j, "epsilon_adapt", t.epsilon_adapt);
  read(j, "return_window", t.return_window);
}

json sac_json(const SacConfig& c) {
  return {{"hidden", c.hidden},
          {"actor_lr", c.actor_lr},
          {"critic_lr", c.critic_lr},
          {"alpha", c.alpha},
          {"discount", c.discount},
          {"tau", c.tau},
          {"target_update_period", c.target_update_period},
          {"actor_update_period", c.actor_update_period},
          {"batch_size", c.batch_size},
          {"log_std_min", c.log_std_min},
          {"log_std_max", c.log_std_max}};
}

void read_sac(const json& j, SacConfig& c) {
  read(j, "hidden", c.hidden);
  read(j, "actor_lr", c.actor_lr);
  read(j, "critic_lr", c.critic_lr);
  read(j, "alpha", c.alpha);
  read(j, "discount", c.discount);
  read(j, "tau", c.tau);
  read(j, "target_update_period", c.target_update_period);
  read(j, "actor_update_period", c.actor_update_period);
  read(j, "batch_size", c.batch_size);
  read(j, "log_std_min", c.log_std_min);
  read(j, "log_std_max", c.log_std_max);
}

json ppo_json(const PpoConfig& c) {
  return {{"hidden", c.hidden},
          {"learning_rate", c.learning_rate},
          {"discount", c.discount},
          {"gae_lambda", c.gae_lambda},
          {"clip", c.clip},
          {"epochs", c.epochs},
          {"minibatch_size", c.minibatch_size},
          {"rollout_steps", c.rollout_steps},
          {"init_log_std", c.init_log_std},
          {"normalize_advantages", c.normalize_advantages}};
}

void read_ppo(const json& j, PpoConfig& c) {
  read(j, "hidden", c.hidden);
  read(j, "learning_rate", c.learning_rate);
  read(j, "discount", c.discount);
  read(j, "gae_lambda", c.gae_lambda);
  read(j, "clip", c.clip);
  read(j, "epochs", c.epochs);
  read(j, "minibatch_size", c.minibatch_size);
  read(j, "rollout_steps", c.rollout_steps);
  read(j, "init_log_std", c.init_log_std);
  read(j, "normalize_advantages", c.normalize_advantages);
}

json reward_json(const RewardModelConfig& c) {
  return {{"ensemble_size", c.ensemble_size}, {"hidden", c.hidden},
          {"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
          {"epochs", c.epochs},               {"target_accuracy", c.target_accuracy},
          {"label_smoothing", c.label_smoothing}};
}

void read_reward(const json& j, RewardModelConfig& c) {
  read(j, "ensemble_size", c.ensemble_size);
  read(j, "hidden", c.hidden);
  read(j, "learning_rate", c.learning_rate);
  read(j, "batch_size", c.batch_size);
  read(j, "epochs", c.epochs);
  read(j, "target_accuracy", c.target_accuracy);
  read(j, "label_smoothing", c.label_smoothing);
}

json exploration_json(const ExplorationConfig& c) {
  return {{"k", c.k},
          {"pretrain_steps", c.pretrain_steps},
          {"random_steps", c.random_steps},
          {"distance_floor", c.distance_floor},
          {"max_reference", c.max_reference}};
}

void read_exploration(const json& j, ExplorationConfig& c) {
  read(j, "k", c.k);
  read(j, "pretrain_steps", c.pretrain_steps);
  read(j, "random_steps", c.random_steps);
  read(j, "distance_floor", c.distance_floor);
  read(j, "max_reference", c.max_reference);
}

// Every key of `given` must exist in `reference`; objects are checked
// recursively except where the reference holds a free-form object.
void check_keys(const json& given, const json& reference, const std::string& prefix) {
  if (!given.is_object()) throw std::invalid_argument("config: expected an object at '" + prefix + "'");
  for (const auto& [key, value] : given.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!reference.contains(key)) throw std::invalid_argument("config: unknown key '" + path + "'");
    const json& ref = reference.at(key);
    if (ref.is_object() && path != "teacher.overrides") check_keys(value, ref, path);
  }
}

std::string resolved_score(const ExperimentConfig& cfg) {
  if (cfg.score != "auto") return cfg.score;
  return cfg.train.env == "push" ? "success" : "return";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ensure_writable(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw std::runtime_error("output directory " + root.string() + " is not writable: " + ec.message());
  const fs::path probe = root / ".bpref_write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw std::runtime_error("output directory " + root.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

// Runs jobs[0..n) on `workers` threads; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn fn) {
  const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), n));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

Algo baseline_of(Algo a) {
  switch (a) {
    case Algo::kPebble:
    case Algo::kSacGt:
      return Algo::kSacGt;
    case Algo::kPrefPpo:
    case Algo::kPpoGt:
      return Algo::kPpoGt;
  }
  return Algo::kSacGt;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw std::invalid_argument("at least one seed is required");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (alignment_episodes < 0) throw std::invalid_argument("alignment_episodes must be >= 0");
  if (score != "auto" && score != "return" && score != "success") {
    throw std::invalid_argument("score must be auto, return or success");
  }
  for (const auto& t : sweep.teachers) bpref::teacher_preset(t);
  for (int b : sweep.budgets) {
    if (b < 0) throw std::invalid_argument("sweep budgets must be >= 0");
  }
  if (sweep.bootstrap_resamples < 1000) throw std::invalid_argument("bootstrap_resamples must be >= 1000");
  train_config(seeds.front()).validate();
}

TrainConfig ExperimentConfig::train_config(std::uint64_t seed) const {
  TrainConfig t = train;
  t.teacher_name = teacher_preset;
  t.teacher = bpref::teacher_preset(teacher_preset);
  apply_teacher_json(teacher_overrides, t.teacher);
  t.sampler.n_query = t.queries_per_session;
  t.seed = seed;
  return t;
}

json to_json(const ExperimentConfig& c) {
  const TrainConfig& t = c.train;
  json j;
  j["env"] = t.env;
  j["algo"] = to_string(t.algo);
  j["teacher"] = {{"preset", c.teacher_preset}, {"overrides", c.teacher_overrides}};
  j["sampler"] = {{"scheme", to_string(t.sampler.scheme)}, {"n_init", t.sampler.n_init}, {"n_inter", t.sampler.n_inter}};
  j["schedule"] = to_string(t.schedule);
  j["budget"] = t.budget;
  j["queries_per_session"] = t.queries_per_session;
  j["feedback_period"] = t.feedback_period;
  j["segment_length"] = t.segment_length;
  j["segment_stride"] = t.segment_stride;
  j["total_steps"] = t.total_steps;
  j["eval_period"] = t.eval_period;
  j["eval_episodes"] = t.eval_episodes;
  j["replay_capacity"] = t.replay_capacity;
  j["reward_cold_start"] = t.reward_cold_start;
  j["reward_member"] = t.reward_member;
  j["reset_critic_after_pretrain"] = t.reset_critic_after_pretrain;
  j["sac"] = sac_json(t.sac);
  j["ppo"] = ppo_json(t.ppo);
  j["reward_model"] = reward_json(t.reward);
  j["exploration"] = exploration_json(t.exploration);
  j["seeds"] = c.seeds;
  j["output_dir"] = c.output_dir;
  j["workers"] = c.workers;
  j["alignment_episodes"] = c.alignment_episodes;
  j["score"] = c.score;
  j["sweep"] = {{"teachers", c.sweep.teachers},
                {"budgets", c.sweep.budgets},
                {"baseline", c.sweep.baseline},
                {"bootstrap_resamples", c.sweep.bootstrap_resamples}};
  return j;
}

ExperimentConfig experiment_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, to_json(c), "");
  TrainConfig& t = c.train;
  read(j, "env", t.env);
  if (j.contains("algo")) t.algo = algo_from_string(j.at("algo").get<std::string>());
  if (j.contains("teacher")) {
    const json& tj = j.at("teacher");
    read(tj, "preset", c.teacher_preset);
    if (tj.contains("overrides")) {
      c.teacher_overrides = tj.at("overrides");
      TeacherConfig probe;
      apply_teacher_json(c.teacher_overrides, probe);  // rejects unknown fields early
    }
  }
  if (j.contains("sampler")) {
    const json& sj = j.at("sampler");
    if (sj.contains("scheme")) t.sampler.scheme = sampling_scheme_from_string(sj.at("scheme").get<std::string>());
    read(sj, "n_init", t.sampler.n_init);
    read(sj, "n_inter", t.sampler.n_inter);
  }
  if (j.contains("schedule")) t.schedule = schedule_kind_from_string(j.at("schedule").get<std::string>());
  read(j, "budget", t.budget);
  read(j, "queries_per_session", t.queries_per_session);
  read(j, "feedback_period", t.feedback_period);
  read(j, "segment_length", t.segment_length);
  read(j, "segment_stride", t.segment_stride);
  read(j, "total_steps", t.total_steps);
  read(j, "eval_period", t.eval_period);
  read(j, "eval_episodes", t.eval_episodes);
  read(j, "replay_capacity", t.replay_capacity);
  read(j, "reward_cold_start", t.reward_cold_start);
  read(j, "reward_member", t.reward_member);
  read(j, "reset_critic_after_pretrain", t.reset_critic_after_pretrain);
  if (j.contains("sac")) read_sac(j.at("sac"), t.sac);
  if (j.contains("ppo")) read_ppo(j.at("ppo"), t.ppo);
  if (j.contains("reward_model")) read_reward(j.at("reward_model"), t.reward);
  if (j.contains("exploration")) read_exploration(j.at("exploration"), t.exploration);
  read(j, "seeds", c.seeds);
  read(j, "output_dir", c.output_dir);
  read(j, "workers", c.workers);
  read(j, "alignment_episodes", c.alignment_episodes);
  read(j, "score", c.score);
  if (j.contains("sweep")) {
    const json& sj = j.at("sweep");
    read(sj, "teachers", c.sweep.teachers);
    read(sj, "budgets", c.sweep.budgets);
    read(sj, "baseline", c.sweep.baseline);
    read(sj, "bootstrap_resamples", c.sweep.bootstrap_resamples);
  }
  return c;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like key=value: " + assignment);
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw std::invalid_argument("override has an empty key segment: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    if (!node->is_object()) throw std::invalid_argument("override path crosses a non-object: " + key);
    start = dot + 1;
  }
}

ExperimentConfig load_experiment(const fs::path& path, const std::vector<std::string>& overrides) {
  json j = json::object();
  if (!path.empty()) {
    j = json::parse(read_text(path));
  }
  for (const auto& o : overrides) apply_override(j, o);
  ExperimentConfig c = experiment_from_json(j);
  c.validate();
  return c;
}

fs::path resolve_output_root(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv(kOutputEnvVar); env != nullptr && *env != '\0') return env;
  return "runs";
}

fs::path run_directory(const fs::path& root, const std::string& env, const std::string& algo,
                       const std::string& teacher, std::uint64_t seed) {
  return root / env / algo / teacher / ("seed_" + std::to_string(seed));
}

RunSummary run_single(const ExperimentConfig& config, std::uint64_t seed, const fs::path& root) {
  const TrainConfig tc = config.train_config(seed);
  TrainResult result = train_preference_rl(tc);
  RunSummary out;
  out.record = result.record;
  out.dir = run_directory(root, out.record.env, out.record.algo, out.record.teacher, seed);
  fs::create_directories(out.dir);

  if (result.ensemble && config.alignment_episodes > 0) {
    const auto env = make_env(tc.env);
    const auto rollouts =
        rollout(*env, *result.agent, config.alignment_episodes, derive_seed(seed, "alignment"), true);
    std::vector<Trajectory> trajs;
    for (const auto& r : rollouts) trajs.push_back(r.trajectory);
    out.reward_alignment = reward_alignment(trajs, *result.ensemble).rank_correlation;
  }

  std::ostringstream curve;
  write_curve_csv(curve, out.record.curve);
  write_text(out.dir / "curve.csv", curve.str());

  std::string records;
  for (const auto& q : result.queries) records += to_jsonl(q) + "\n";
  write_text(out.dir / "records.jsonl", records);

  ExperimentConfig snapshot = config;
  snapshot.seeds = {seed};
  write_text(out.dir / "config.snapshot", to_json(snapshot).dump(2) + "\n");

  std::map<std::string, long> counts;
  for (const auto& q : result.queries) ++counts[to_string(q.label)];
  const std::string score_kind = resolved_score(config);
  json s;
  s["run_id"] = out.record.run_id;
  s["env"] = out.record.env;
  s["algo"] = out.record.algo;
  s["teacher"] = out.record.teacher;
  s["budget"] = out.record.budget;
  s["seed"] = seed;
  s["final_return"] = out.record.final_return();
  s["final_success"] = out.record.final_success();
  s["final_eval_returns"] = out.record.final_eval_returns;
  s["score_kind"] = score_kind;
  s["score"] = score_kind == "success" ? out.record.final_success() : out.record.final_return();
  s["queries_used"] = out.record.curve.empty() ? 0 : out.record.curve.back().queries_used;
  s["planned_per_session"] = result.planned_per_session;
  s["issued_per_session"] = result.issued_per_session;
  s["truncated_sessions"] = result.truncated_sessions;
  s["teacher_ties"] = result.teacher_ties;
  s["teacher_flips"] = result.teacher_flips;
  s["label_counts"] = counts;
  s["reward_alignment"] = out.reward_alignment ? json(*out.reward_alignment) : json(nullptr);
  write_text(out.dir / "summary.json", s.dump(2) + "\n");
  return out;
}

std::vector<RunSummary> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const fs::path root = resolve_output_root(config.output_dir);
  ensure_writable(root);
  std::vector<RunSummary> out(config.seeds.size());
  parallel_for(config.seeds.size(), config.workers,
               [&](std::size_t i) { out[i] = run_single(config, config.seeds[i], root); });
  return out;
}

AggregateReport sweep_robustness(const ExperimentConfig& config) {
  config.validate();
  const fs::path root = resolve_output_root(config.output_dir);
  ensure_writable(root);
  const std::vector<int> budgets = config.sweep.budgets.empty() ? std::vector<int>{config.train.budget}
                                                                 : config.sweep.budgets;
  const bool multi_budget = budgets.size() > 1;

  struct Job {
    ExperimentConfig cfg;
    std::uint64_t seed;
    fs::path root;
  };
  std::vector<Job> jobs;
  if (uses_preferences(config.train.algo)) {
    for (int b : budgets) {
      const fs::path broot = multi_budget ? root / ("budget_" + std::to_string(b)) : root;
      for (const auto& teacher : config.sweep.teachers) {
        ExperimentConfig c = config;
        c.train.budget = b;
        c.teacher_preset = teacher;
        for (auto seed : config.seeds) jobs.push_back({c, seed, broot});
      }
    }
  }
  if (config.sweep.baseline) {
    ExperimentConfig c = config;
    c.train.algo = baseline_of(config.train.algo);
    for (auto seed : config.seeds) jobs.push_back({c, seed, root});
  }
  parallel_for(jobs.size(), config.workers,
               [&](std::size_t i) { run_single(jobs[i].cfg, jobs[i].seed, jobs[i].root); });

  AggregateReport report = aggregate_directory(root, config.sweep.bootstrap_resamples, derive_seed(0, "report"));
  write_text(root / "report.json", to_json(report).dump(2) + "\n");
  std::ostringstream csv;
  write_plot_csv(csv, report);
  write_text(root / "report.csv", csv.str());
  return report;
}

namespace {

struct FoundRun {
  json summary;
  double score = 0.0;
  fs::path dir;
};

std::vector<FoundRun> find_runs(const fs::path& root) {
  std::vector<FoundRun> runs;
  if (!fs::exists(root)) throw std::runtime_error("no such directory: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().filename() != "summary.json") continue;
    FoundRun r;
    r.dir = entry.path().parent_path();
    r.summary = json::parse(read_text(entry.path()));
    std::ifstream curve_in(r.dir / "curve.csv");
    if (!curve_in) throw std::runtime_error("missing curve.csv next to " + entry.path().string());
    const auto curve = read_curve_csv(curve_in);
    // The final checkpoint is the final evaluation; the summary keeps the
    // success/return choice made at run time.
    const bool success = r.summary.value("score_kind", std::string("return")) == "success";
    r.score = curve.empty() ? 0.0 : (success ? curve.back().success : curve.back().true_return);
    runs.push_back(std::move(r));
  }
  std::sort(runs.begin(), runs.end(), [](const FoundRun& a, const FoundRun& b) { return a.dir < b.dir; });
  return runs;
}

}  // namespace

AggregateReport aggregate_directory(const fs::path& root, int resamples, std::uint64_t seed) {
  const auto runs = find_runs(root);
  // (env, algo) -> baseline scores
  std::map<std::pair<std::string, std::string>, std::vector<double>> baselines;
  // (env, teacher, algo, budget) -> scores ordered by seed
  std::map<std::tuple<std::string, std::string, std::string, int>, std::vector<std::pair<std::uint64_t, double>>>
      cells;
  for (const auto& r : runs) {
    const auto env = r.summary.at("env").get<std::string>();
    const auto algo = r.summary.at("algo").get<std::string>();
    if (!uses_preferences(algo_from_string(algo))) baselines[{env, algo}].push_back(r.score);
    cells[{env, r.summary.at("teacher").get<std::string>(), algo, r.summary.at("budget").get<int>()}].push_back(
        {r.summary.at("seed").get<std::uint64_t>(), r.score});
  }
  AggregateReport report;
  for (auto& [key, entries] : cells) {
    const auto& [env, teacher, algo, budget] = key;
    const std::string base_algo = to_string(baseline_of(algo_from_string(algo)));
    auto it = baselines.find({env, base_algo});
    if (it == baselines.end()) {
      throw std::runtime_error("no " + base_algo + " baseline runs for env " + env + " under " + root.string());
    }
    std::sort(entries.begin(), entries.end());
    std::vector<double> raw;
    for (const auto& e : entries) raw.push_back(e.second);
    ReportCell cell;
    cell.env = env;
    cell.teacher = teacher;
    cell.algo = algo;
    cell.budget = budget;
    cell.scores = normalized_scores(raw, it->second);
    summarize_cell(cell, resamples, 0.95, derive_seed(seed, env + "/" + teacher + "/" + algo + "/" +
                                                                 std::to_string(budget)));
    report.cells.push_back(std::move(cell));
  }
  return report;
}

LabelStats label_stats_from_log(const std::string& run, const std::vector<QueryLog>& log) {
  LabelStats s;
  s.run = run;
  s.queries = static_cast<long>(log.size());
  long skipped = 0;
  long equal = 0;
  long comparable = 0;
  long contradicting = 0;
  for (const auto& q : log) {
    if (q.label == Preference::kSkipped) {
      ++skipped;
    } else if (q.label == Preference::kEqual) {
      ++equal;
    } else if (q.discounted0 != q.discounted1) {
      ++comparable;
      const Preference truth = q.discounted1 > q.discounted0 ? Preference::kSecond : Preference::kFirst;
      if (q.label != truth) ++contradicting;
    }
  }
  if (s.queries > 0) {
    s.skip_fraction = static_cast<double>(skipped) / static_cast<double>(s.queries);
    s.equal_fraction = static_cast<double>(equal) / static_cast<double>(s.queries);
  }
  if (comparable > 0) s.flip_estimate = static_cast<double>(contradicting) / static_cast<double>(comparable);
  return s;
}

std::vector<LabelStats> label_stats(const fs::path& root) {
  std::vector<fs::path> files;
  if (!fs::exists(root)) throw std::runtime_error("no such directory: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().filename() == "records.jsonl") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LabelStats> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::vector<QueryLog> log;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) log.push_back(query_log_from_json_line(line));
    }
    out.push_back(label_stats_from_log(fs::relative(f.parent_path(), root).generic_string(), log));
  }
  return out;
}

json to_json(const LabelStats& s) {
  return {{"run", s.run},
          {"queries", s.queries},
          {"skip_fraction", s.skip_fraction},
          {"equal_fraction", s.equal_fraction},
          {"flip_estimate", s.flip_estimate ? json(*s.flip_estimate) : json(nullptr)}};
}

void write_curve_table(std::ostream& out, const fs::path& root) {
  out << "env,algo,teacher,budget,seed," << kCurveHeader << '\n';
  for (const auto& r : find_runs(root)) {
    std::ifstream in(r.dir / "curve.csv");
    const auto rows = read_curve_csv(in);
    std::ostringstream body;
    write_curve_csv(body, rows);
    std::istringstream lines(body.str());
    std::string line;
    std::getline(lines, line);  // header
    const std::string prefix = r.summary.at("env").get<std::string>() + "," +
                               r.summary.at("algo").get<std::string>() + "," +
                               r.summary.at("teacher").get<std::string>() + "," +
                               std::to_string(r.summary.at("budget").get<int>()) + "," +
                               std::to_string(r.summary.at("seed").get<std::uint64_t>()) + ",";
    while (std::getline(lines, line)) out << prefix << line << '\n';
  }
}

}  // namespace bpref
