#include "bpref/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "bpref/random.hpp"

namespace bpref {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double median(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of an empty sample");
  std::vector<double> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double iqm(std::span<const double> scores) {
  if (scores.size() < 4) throw std::invalid_argument("IQM needs at least four scores");
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  const std::size_t cut = v.size() / 4;
  return std::accumulate(v.begin() + cut, v.end() - cut, 0.0) / static_cast<double>(v.size() - 2 * cut);
}

double optimality_gap(std::span<const double> scores, double target) {
  if (scores.empty()) throw std::invalid_argument("optimality gap of an empty sample");
  double gap = 0.0;
  for (double s : scores) gap += std::max(0.0, target - s);
  return gap / static_cast<double>(scores.size());
}

double normalized_return(std::span<const double> pref_returns, std::span<const double> gt_returns) {
  const double base = mean(gt_returns);
  if (!(base > 0.0)) {
    throw std::invalid_argument("normalized return: baseline mean " + std::to_string(base) +
                                " is not positive; the ground-truth baseline did not learn");
  }
  return mean(pref_returns) / base;
}

std::vector<double> normalized_scores(std::span<const double> pref_returns, std::span<const double> gt_returns) {
  const double base = mean(gt_returns);
  if (!(base > 0.0)) {
    throw std::invalid_argument("normalized scores: baseline mean " + std::to_string(base) + " is not positive");
  }
  std::vector<double> out;
  for (double r : pref_returns) out.push_back(r / base);
  return out;
}

std::string to_string(Metric m) {
  switch (m) {
    case Metric::kMean:
      return "mean";
    case Metric::kMedian:
      return "median";
    case Metric::kIqm:
      return "iqm";
    case Metric::kOptimalityGap:
      return "optimality_gap";
  }
  return "mean";
}

double compute_metric(Metric m, std::span<const double> scores) {
  switch (m) {
    case Metric::kMean:
      return mean(scores);
    case Metric::kMedian:
      return median(scores);
    case Metric::kIqm:
      return iqm(scores);
    case Metric::kOptimalityGap:
      return optimality_gap(scores);
  }
  return 0.0;
}

namespace {

// Linear interpolation between order statistics (type 7).
double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Interval bootstrap_ci(const std::vector<std::vector<double>>& strata,
                      const std::function<double(std::span<const double>)>& statistic, int resamples, double level,
                      std::uint64_t seed) {
  if (resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap level must be in (0, 1)");
  std::size_t total = 0;
  for (const auto& s : strata) total += s.size();
  if (total == 0) throw std::invalid_argument("bootstrap of an empty sample");
  Rng rng(derive_seed(seed, "bootstrap"));
  std::vector<double> stats(static_cast<std::size_t>(resamples));
  std::vector<double> draw(total);
  for (int b = 0; b < resamples; ++b) {
    std::size_t k = 0;
    for (const auto& s : strata) {
      for (std::size_t i = 0; i < s.size(); ++i) draw[k++] = s[rng.index(s.size())];
    }
    stats[static_cast<std::size_t>(b)] = statistic(draw);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = 0.5 * (1.0 - level);
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

Interval bootstrap_ci(const std::vector<std::vector<double>>& strata, Metric metric, int resamples, double level,
                      std::uint64_t seed) {
  return bootstrap_ci(
      strata, [metric](std::span<const double> xs) { return compute_metric(metric, xs); }, resamples, level, seed);
}

namespace {

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mx = mean(rx);
  const double my = mean(ry);
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

RewardAlignment reward_alignment(std::span<const Trajectory> rollouts, const RewardEnsemble& ensemble) {
  if (rollouts.empty()) throw std::invalid_argument("reward alignment: no rollouts");
  RewardAlignment out;
  for (const auto& tr : rollouts) {
    for (int t = 0; t < tr.length(); ++t) {
      out.learned.push_back(ensemble.predict_reward(tr.states.col(t), tr.actions.col(t)));
      out.truth.push_back(tr.rewards[t]);
    }
  }
  if (out.learned.empty()) throw std::invalid_argument("reward alignment: empty rollouts");
  out.rank_correlation = spearman(out.learned, out.truth);
  return out;
}

const ReportCell* AggregateReport::find(const std::string& env, const std::string& teacher,
                                        const std::string& algo, int budget) const {
  for (const auto& c : cells) {
    if (c.env == env && c.teacher == teacher && c.algo == algo && c.budget == budget) return &c;
  }
  return nullptr;
}

void summarize_cell(ReportCell& cell, int resamples, double level, std::uint64_t seed) {
  if (cell.scores.empty()) return;
  const std::vector<std::vector<double>> strata{cell.scores};
  auto fill = [&](MetricSummary& out, Metric m) {
    if (m == Metric::kIqm && cell.scores.size() < 4) return;
    out.value = compute_metric(m, cell.scores);
    out.ci = bootstrap_ci(strata, m, resamples, level, derive_seed(seed, to_string(m)));
  };
  fill(cell.mean, Metric::kMean);
  fill(cell.median, Metric::kMedian);
  fill(cell.iqm, Metric::kIqm);
  fill(cell.optimality_gap, Metric::kOptimalityGap);
}

namespace {

nlohmann::json summary_json(const MetricSummary& m) {
  nlohmann::json j;
  j["value"] = m.value ? nlohmann::json(*m.value) : nlohmann::json(nullptr);
  j["ci_low"] = m.ci ? nlohmann::json(m.ci->lo) : nlohmann::json(nullptr);
  j["ci_high"] = m.ci ? nlohmann::json(m.ci->hi) : nlohmann::json(nullptr);
  return j;
}

MetricSummary summary_from_json(const nlohmann::json& j) {
  MetricSummary m;
  if (!j.at("value").is_null()) m.value = j.at("value").get<double>();
  if (!j.at("ci_low").is_null()) m.ci = Interval{j.at("ci_low").get<double>(), j.at("ci_high").get<double>()};
  return m;
}

}  // namespace

nlohmann::json to_json(const AggregateReport& report) {
  nlohmann::json j;
  j["format"] = "bpref.aggregate_report.v1";
  j["cells"] = nlohmann::json::array();
  for (const auto& c : report.cells) {
    nlohmann::json cj;
    cj["env"] = c.env;
    cj["teacher"] = c.teacher;
    cj["algo"] = c.algo;
    cj["budget"] = c.budget;
    cj["scores"] = c.scores;
    cj["mean"] = summary_json(c.mean);
    cj["median"] = summary_json(c.median);
    cj["iqm"] = summary_json(c.iqm);
    cj["optimality_gap"] = summary_json(c.optimality_gap);
    j["cells"].push_back(cj);
  }
  return j;
}

AggregateReport report_from_json(const nlohmann::json& j) {
  AggregateReport r;
  for (const auto& cj : j.at("cells")) {
    ReportCell c;
    c.env = cj.at("env").get<std::string>();
    c.teacher = cj.at("teacher").get<std::string>();
    c.algo = cj.at("algo").get<std::string>();
    c.budget = cj.at("budget").get<int>();
    c.scores = cj.at("scores").get<std::vector<double>>();
    c.mean = summary_from_json(cj.at("mean"));
    c.median = summary_from_json(cj.at("median"));
    c.iqm = summary_from_json(cj.at("iqm"));
    c.optimality_gap = summary_from_json(cj.at("optimality_gap"));
    r.cells.push_back(std::move(c));
  }
  return r;
}

void write_plot_csv(std::ostream& out, const AggregateReport& report) {
  out << "env,teacher,algo,budget,metric,value,ci_low,ci_high\n";
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& c : report.cells) {
    const std::pair<const char*, const MetricSummary*> rows[] = {
        {"mean", &c.mean}, {"median", &c.median}, {"iqm", &c.iqm}, {"optimality_gap", &c.optimality_gap}};
    for (const auto& [name, m] : rows) {
      out << c.env << ',' << c.teacher << ',' << c.algo << ',' << c.budget << ',' << name << ','
          << opt(m->value) << ',' << (m->ci ? std::to_string(m->ci->lo) : "") << ','
          << (m->ci ? std::to_string(m->ci->hi) : "") << '\n';
    }
  }
}

}  // namespace bpref
