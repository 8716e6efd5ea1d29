#include "bpref/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace bpref {

std::string to_string(SamplingScheme s) {
  switch (s) {
    case SamplingScheme::kUniform:
      return "uniform";
    case SamplingScheme::kDisagreement:
      return "disagreement";
    case SamplingScheme::kEntropy:
      return "entropy";
    case SamplingScheme::kCoverage:
      return "coverage";
    case SamplingScheme::kDisagreementCoverage:
      return "disagreement_coverage";
    case SamplingScheme::kEntropyCoverage:
      return "entropy_coverage";
  }
  return "uniform";
}

SamplingScheme sampling_scheme_from_string(const std::string& name) {
  if (name == "uniform") return SamplingScheme::kUniform;
  if (name == "disagreement") return SamplingScheme::kDisagreement;
  if (name == "entropy") return SamplingScheme::kEntropy;
  if (name == "coverage") return SamplingScheme::kCoverage;
  if (name == "disagreement_coverage") return SamplingScheme::kDisagreementCoverage;
  if (name == "entropy_coverage") return SamplingScheme::kEntropyCoverage;
  throw std::invalid_argument("unknown sampling scheme: " + name);
}

void SamplerConfig::validate() const {
  if (n_query < 0) throw std::invalid_argument("sampler: n_query must be >= 0");
  const bool hybrid = scheme == SamplingScheme::kDisagreementCoverage ||
                      scheme == SamplingScheme::kEntropyCoverage;
  if (hybrid && !(n_query <= resolved_inter() && resolved_inter() <= resolved_init())) {
    throw std::invalid_argument("sampler: need n_query <= n_inter <= n_init");
  }
  if (n_query > resolved_init()) throw std::invalid_argument("sampler: need n_query <= n_init");
}

std::vector<SegmentPair> sample_uniform(std::size_t buffer_size, std::size_t n, Rng& rng) {
  std::vector<SegmentPair> pairs;
  if (n == 0) return pairs;
  if (buffer_size < 2) throw std::invalid_argument("sample_uniform: need at least two segments");
  pairs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t a = rng.index(buffer_size);
    // Uniform over the other buffer_size - 1 segments.
    std::size_t b = rng.index(buffer_size - 1);
    if (b >= a) ++b;
    pairs.push_back({a, b});
  }
  return pairs;
}

std::vector<std::size_t> select_by_score(std::span<const double> scores, std::size_t n) {
  if (n > scores.size()) throw std::invalid_argument("select_by_score: n exceeds pool size");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(n);
  return idx;
}

std::vector<std::size_t> kcenter_select(const Eigen::MatrixXd& features, std::size_t n) {
  const std::size_t m = static_cast<std::size_t>(features.cols());
  if (m == 0) throw std::invalid_argument("kcenter_select: empty pool");
  if (n > m) throw std::invalid_argument("kcenter_select: n exceeds pool size");
  std::vector<std::size_t> centers;
  if (n == 0) return centers;
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(m, false);
  std::size_t next = 0;
  while (centers.size() < n) {
    centers.push_back(next);
    taken[next] = true;
    const auto c = features.col(static_cast<Eigen::Index>(next));
    double best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      nearest[i] = std::min(nearest[i], (features.col(static_cast<Eigen::Index>(i)) - c).norm());
      if (!taken[i] && nearest[i] > best) {
        best = nearest[i];
        next = i;
      }
    }
  }
  return centers;
}

double covering_radius(const Eigen::MatrixXd& features, std::span<const std::size_t> centers) {
  if (centers.empty()) return std::numeric_limits<double>::infinity();
  double radius = 0.0;
  for (Eigen::Index i = 0; i < features.cols(); ++i) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c : centers) {
      nearest = std::min(nearest, (features.col(i) - features.col(static_cast<Eigen::Index>(c))).norm());
    }
    radius = std::max(radius, nearest);
  }
  return radius;
}

std::vector<std::size_t> hybrid_select(std::span<const double> scores, const Eigen::MatrixXd& features,
                                       std::size_t n_inter, std::size_t n_query) {
  if (!(n_query <= n_inter && n_inter <= scores.size())) {
    throw std::invalid_argument("hybrid_select: need n_query <= n_inter <= pool size");
  }
  const std::vector<std::size_t> uncertain = select_by_score(scores, n_inter);
  Eigen::MatrixXd sub(features.rows(), static_cast<Eigen::Index>(uncertain.size()));
  for (std::size_t i = 0; i < uncertain.size(); ++i) {
    sub.col(static_cast<Eigen::Index>(i)) = features.col(static_cast<Eigen::Index>(uncertain[i]));
  }
  std::vector<std::size_t> out;
  for (std::size_t c : kcenter_select(sub, n_query)) out.push_back(uncertain[c]);
  return out;
}

Eigen::MatrixXd pair_features(std::span<const Segment> buffer, std::span<const SegmentPair> pairs) {
  if (pairs.empty()) return {};
  const Eigen::Index per = buffer[pairs.front().first].states.size();
  Eigen::MatrixXd f(2 * per, static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& s0 = buffer[pairs[k].first].states;
    const auto& s1 = buffer[pairs[k].second].states;
    f.col(static_cast<Eigen::Index>(k)).head(per) = Eigen::Map<const Eigen::VectorXd>(s0.data(), per);
    f.col(static_cast<Eigen::Index>(k)).tail(per) = Eigen::Map<const Eigen::VectorXd>(s1.data(), per);
  }
  return f;
}

double equal_label_fraction(std::span<const Preference> labels) {
  long answered = 0;
  long equal = 0;
  for (Preference p : labels) {
    if (p == Preference::kSkipped) continue;
    ++answered;
    if (p == Preference::kEqual) ++equal;
  }
  return answered > 0 ? static_cast<double>(equal) / answered : 0.0;
}

double equal_label_fraction(std::span<const PreferenceRecord> records) {
  std::vector<Preference> labels;
  labels.reserve(records.size());
  for (const auto& r : records) labels.push_back(r.label);
  return equal_label_fraction(labels);
}

QuerySampler::QuerySampler(SamplerConfig config) : config_(config), rng_(config.rng_seed) {
  config_.validate();
}

std::vector<SegmentPair> QuerySampler::select(std::span<const Segment> buffer, const RewardEnsemble& ensemble,
                                              std::size_t n) {
  if (n == 0) return {};
  if (config_.scheme == SamplingScheme::kUniform) return sample_uniform(buffer.size(), n, rng_);

  // Pool sizes keep the configured ratios to n_query.
  const double scale = config_.n_query > 0 ? static_cast<double>(n) / config_.n_query : 1.0;
  const std::size_t n_init =
      std::max(n, static_cast<std::size_t>(std::llround(scale * config_.resolved_init())));
  const std::size_t n_inter = std::clamp(
      static_cast<std::size_t>(std::llround(scale * config_.resolved_inter())), n, n_init);
  const std::vector<SegmentPair> pool = sample_uniform(buffer.size(), n_init, rng_);

  std::vector<double> scores;
  const bool by_disagreement = config_.scheme == SamplingScheme::kDisagreement ||
                               config_.scheme == SamplingScheme::kDisagreementCoverage;
  const bool by_entropy = config_.scheme == SamplingScheme::kEntropy ||
                          config_.scheme == SamplingScheme::kEntropyCoverage;
  if (by_disagreement || by_entropy) {
    scores.reserve(pool.size());
    for (const auto& p : pool) {
      scores.push_back(by_disagreement ? ensemble.disagreement(buffer[p.first], buffer[p.second])
                                       : ensemble.predictor_entropy(buffer[p.first], buffer[p.second]));
    }
  }

  std::vector<std::size_t> chosen;
  switch (config_.scheme) {
    case SamplingScheme::kDisagreement:
    case SamplingScheme::kEntropy:
      chosen = select_by_score(scores, n);
      break;
    case SamplingScheme::kCoverage:
      chosen = kcenter_select(pair_features(buffer, pool), n);
      break;
    case SamplingScheme::kDisagreementCoverage:
    case SamplingScheme::kEntropyCoverage:
      chosen = hybrid_select(scores, pair_features(buffer, pool), n_inter, n);
      break;
    case SamplingScheme::kUniform:
      break;
  }
  std::vector<SegmentPair> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t c : chosen) {
    if (!seen.insert({pool[c].first, pool[c].second}).second) ++duplicates_;
    out.push_back(pool[c]);
  }
  return out;
}

}  // namespace bpref
