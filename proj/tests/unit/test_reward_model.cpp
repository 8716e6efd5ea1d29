#include <doctest.h>

#include <cmath>
#include <vector>

#include "bpref/numeric.hpp"
#include "bpref/random.hpp"
#include "bpref/reward_model.hpp"

using namespace bpref;

namespace {

Segment random_segment(Rng& rng, int sd, int ad, int h) {
  Segment s;
  s.states.resize(sd, h);
  s.actions.resize(ad, h);
  s.rewards.resize(h);
  for (int t = 0; t < h; ++t) {
    for (int i = 0; i < sd; ++i) s.states(i, t) = rng.uniform(-1.0, 1.0);
    for (int i = 0; i < ad; ++i) s.actions(i, t) = rng.uniform(-1.0, 1.0);
    s.rewards[t] = s.states(0, t);
  }
  return s;
}

// Per-step reward of the hidden linear ground truth used for synthetic labels.
double truth(const Segment& s) { return s.states.row(0).sum() - 0.5 * s.states.row(1).sum(); }

double direct_loss(const Mlp& net, const std::vector<PreferenceRecord>& batch, bool smoothing) {
  double total = 0.0;
  for (const auto& r : batch) {
    const double s0 = net.forward(reward_inputs(r.seg0.states, r.seg0.actions)).sum();
    const double s1 = net.forward(reward_inputs(r.seg1.states, r.seg1.actions)).sum();
    auto y = *label_target(r.label);
    if (smoothing) y = smooth_label(y);
    const double p1 = 1.0 / (1.0 + std::exp(-(s1 - s0)));
    total -= y[0] * std::log(1.0 - p1) + y[1] * std::log(p1);
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("reward network forward") {
  Mlp net({1, 2, 1}, Activation::kLeakyRelu, Activation::kTanh);
  Eigen::VectorXd p(7);
  p << 1.0, -2.0, 0.1, 0.2, 0.5, 1.0, -0.1;  // W1, b1, W2, b2
  net.set_parameters(p);
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  const double h0 = 0.6;
  const double h1 = 0.01 * (-0.8);
  CHECK(net.forward(x)(0, 0) == doctest::Approx(std::tanh(0.5 * h0 + 1.0 * h1 - 0.1)).epsilon(1e-14));

  net.set_parameters(Eigen::VectorXd::Zero(7));
  CHECK(net.forward(x)(0, 0) == 0.0);

  Rng rng(1);
  RewardModelConfig cfg;
  RewardEnsemble ens(3, 2, cfg);
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd s = 5.0 * Eigen::VectorXd::Random(3);
    Eigen::VectorXd a = 5.0 * Eigen::VectorXd::Random(2);
    const double r = ens.predict_reward(s, a);
    CHECK(std::abs(r) < 1.0);
    double mean = 0.0;
    for (std::size_t m = 0; m < ens.size(); ++m) mean += ens.predict_reward(m, s, a);
    CHECK(r == doctest::Approx(mean / 3.0).epsilon(1e-14));
  }
}

TEST_CASE("preference predictor") {
  Rng rng(2);
  RewardEnsemble ens(2, 1, RewardModelConfig{});
  const Segment a = random_segment(rng, 2, 1, 5);
  const Segment b = random_segment(rng, 2, 1, 5);
  CHECK(ens.predict_preference(0, a, a) == 0.5);
  const double pab = ens.predict_preference(0, a, b);
  CHECK(pab + ens.predict_preference(0, b, a) == doctest::Approx(1.0).epsilon(1e-14));
  const double d = ens.predict_rewards(0, reward_inputs(b.states, b.actions)).sum() -
                   ens.predict_rewards(0, reward_inputs(a.states, a.actions)).sum();
  CHECK(pab == doctest::Approx(logistic(d)).epsilon(1e-14));
  CHECK(logistic(0.5) == doctest::Approx(0.622459).epsilon(1e-6));
}

TEST_CASE("preference loss values") {
  // One linear unit with a saturated tanh: +1 on positive states, -1 on negative.
  Mlp net({1, 1}, Activation::kIdentity, Activation::kTanh);
  Eigen::VectorXd p(2);
  p << 100.0, 0.0;
  net.set_parameters(p);
  Segment pos;
  pos.states = Eigen::MatrixXd::Constant(1, 25, 1.0);
  pos.actions.resize(0, 25);
  pos.rewards = Eigen::VectorXd::Zero(25);
  Segment neg = pos;
  neg.states.setConstant(-1.0);
  std::vector<PreferenceRecord> batch{{pos, neg, Preference::kFirst, 0}};
  CHECK(preference_loss(net, batch, false).loss < 1e-12);
  CHECK(preference_loss(net, batch, false).accuracy == 1.0);
  batch[0].label = Preference::kSecond;
  CHECK(preference_loss(net, batch, false).accuracy == 0.0);

  std::vector<PreferenceRecord> equal{{pos, pos, Preference::kEqual, 0}};
  CHECK(preference_loss(net, equal, false).loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss gradient matches central differences") {
  Rng rng(3);
  for (bool smoothing : {false, true}) {
    RewardModelConfig cfg;
    cfg.hidden = {6, 5};
    cfg.seed = 9;
    RewardEnsemble ens(3, 2, cfg);
    std::vector<PreferenceRecord> batch;
    const Preference labels[] = {Preference::kFirst, Preference::kSecond, Preference::kEqual};
    for (int i = 0; i < 6; ++i) {
      batch.push_back({random_segment(rng, 3, 2, 4), random_segment(rng, 3, 2, 4), labels[i % 3], 0});
    }
    const Mlp& net = ens.member(0);
    const PreferenceLoss pl = preference_loss(net, batch, smoothing);
    CHECK(pl.loss == doctest::Approx(direct_loss(net, batch, smoothing)).epsilon(1e-12));
    const Eigen::VectorXd g = flatten(pl.gradient);
    const Eigen::VectorXd p = net.parameters();
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Mlp probe = net;
      Eigen::VectorXd q = p;
      const double h = 1e-6;
      q[i] += h;
      probe.set_parameters(q);
      const double up = direct_loss(probe, batch, smoothing);
      q[i] -= 2 * h;
      probe.set_parameters(q);
      const double down = direct_loss(probe, batch, smoothing);
      const double fd = (up - down) / (2 * h);
      CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max(1e-3, std::abs(fd)));
    }
  }
}

TEST_CASE("label smoothing") {
  const auto y = smooth_label({1.0, 0.0});
  CHECK(y[0] == doctest::Approx(0.95));
  CHECK(y[1] == doctest::Approx(0.05));
  const auto e = smooth_label({0.5, 0.5});
  CHECK(e[0] == doctest::Approx(0.5));
}

TEST_CASE("annotation store") {
  Rng rng(4);
  AnnotationStore store(3);
  const Segment a = random_segment(rng, 2, 1, 5);
  CHECK_FALSE(store.add({a, a, Preference::kSkipped, 0}));
  CHECK(store.empty());
  for (int i = 0; i < 5; ++i) CHECK(store.add({a, a, Preference::kFirst, i}));
  CHECK(store.size() == 3);
  CHECK(store.records().front().query_step == 2);
  CHECK_THROWS(store.add({random_segment(rng, 2, 1, 4), random_segment(rng, 2, 1, 4), Preference::kFirst, 9}));
}

TEST_CASE("training on separable synthetic preferences") {
  Rng rng(5);
  AnnotationStore store;
  for (int i = 0; i < 50; ++i) {
    Segment a = random_segment(rng, 2, 1, 10);
    Segment b = random_segment(rng, 2, 1, 10);
    store.add({a, b, truth(a) > truth(b) ? Preference::kFirst : Preference::kSecond, 0});
  }
  RewardModelConfig cfg;
  cfg.seed = 1;
  RewardEnsemble ens(2, 1, cfg);
  const TrainStats first = ens.train(store, 1, cfg.batch_size);
  const TrainStats stats = ens.train(store);
  CHECK(stats.members.size() == 3);
  CHECK(stats.mean_accuracy() >= 0.95);
  for (std::size_t m = 0; m < 3; ++m) CHECK(stats.members[m].final_loss <= first.members[m].final_loss);
}

TEST_CASE("contradictory labels drive the predictor toward one half") {
  Rng rng(6);
  const Segment a = random_segment(rng, 2, 1, 5);
  const Segment b = random_segment(rng, 2, 1, 5);
  AnnotationStore store;
  for (int i = 0; i < 10; ++i) {
    store.add({a, b, Preference::kFirst, 0});
    store.add({a, b, Preference::kSecond, 0});
  }
  RewardModelConfig cfg;
  cfg.target_accuracy = 0.0;
  RewardEnsemble ens(2, 1, cfg);
  ens.train(store, 300, 20);
  for (std::size_t m = 0; m < ens.size(); ++m) CHECK(ens.predict_preference(m, a, b) == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("disagreement and entropy") {
  const std::vector<double> p{0.2, 0.5, 0.8};
  CHECK(ensemble_disagreement(p) == doctest::Approx(0.06));
  CHECK(ensemble_disagreement(std::vector<double>{0.0, 1.0}) == doctest::Approx(0.25));
  CHECK_THROWS(ensemble_disagreement(std::vector<double>{0.3}));

  Rng rng(7);
  RewardEnsemble ens(2, 1, RewardModelConfig{});
  const Segment a = random_segment(rng, 2, 1, 5);
  const Segment b = random_segment(rng, 2, 1, 5);
  for (std::size_t m = 1; m < ens.size(); ++m) ens.member(m) = ens.member(0);
  CHECK(ens.disagreement(a, b) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(ens.predictor_entropy(a, a) == doctest::Approx(std::log(2.0)));
  for (int i = 0; i < 50; ++i) {
    RewardEnsemble fresh(2, 1, RewardModelConfig{3, {8}, 3e-4, 16, 1, 0.0, false, static_cast<std::uint64_t>(i)});
    const double v = fresh.disagreement(random_segment(rng, 2, 1, 5), random_segment(rng, 2, 1, 5));
    CHECK(v >= 0.0);
    CHECK(v <= 0.25);
  }
}

TEST_CASE("determinism and reinitialization") {
  Rng rng(8);
  AnnotationStore store;
  for (int i = 0; i < 20; ++i) {
    Segment a = random_segment(rng, 2, 1, 5);
    Segment b = random_segment(rng, 2, 1, 5);
    store.add({a, b, truth(a) > truth(b) ? Preference::kFirst : Preference::kSecond, 0});
  }
  RewardModelConfig cfg;
  cfg.seed = 42;
  RewardEnsemble x(2, 1, cfg);
  RewardEnsemble y(2, 1, cfg);
  x.train(store, 5, 8);
  y.train(store, 5, 8);
  CHECK(x.member(1).parameters() == y.member(1).parameters());
  const Eigen::VectorXd before = x.member(0).parameters();
  x.reinitialize();
  CHECK(x.member(0).parameters() != before);
  CHECK(x.member(0).parameters() != y.member(0).parameters());
}
