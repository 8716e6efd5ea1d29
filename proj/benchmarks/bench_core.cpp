#include <benchmark/benchmark.h>

#include "bpref/agents/exploration.hpp"
#include "bpref/agents/sac.hpp"
#include "bpref/nn.hpp"
#include "bpref/random.hpp"
#include "bpref/reward_model.hpp"
#include "bpref/sampler.hpp"

using namespace bpref;

namespace {

Mlp net_64(int in, int out) {
  Mlp net({in, 64, 64, out}, Activation::kRelu, Activation::kIdentity);
  Rng rng(1);
  net.initialize(rng);
  return net;
}

void BM_MlpForward(benchmark::State& state) {
  const Mlp net = net_64(6, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpForward)->Arg(1)->Arg(128)->Arg(1024);

void BM_MlpBackward(benchmark::State& state) {
  const Mlp net = net_64(6, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, state.range(0));
  const Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, state.range(0));
  for (auto _ : state) {
    Mlp::Tape tape;
    net.forward(x, tape);
    MlpGradient grad = zero_gradient(net);
    benchmark::DoNotOptimize(net.backward(tape, g, &grad));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpBackward)->Arg(128)->Arg(1024);

void BM_SacUpdate(benchmark::State& state) {
  SacConfig cfg;
  SacAgent agent(4, 2, cfg, 1);
  Rng rng(2);
  ReplayBuffer buf(4, 2, 10000);
  for (int i = 0; i < 10000; ++i) {
    Transition t;
    t.state = Eigen::VectorXd::Random(4);
    t.action = Eigen::VectorXd::Random(2);
    t.next_state = Eigen::VectorXd::Random(4);
    t.reward_true = rng.uniform();
    buf.add(t, 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(agent.update(buf.sample(cfg.batch_size, rng)));
}
BENCHMARK(BM_SacUpdate);

void BM_RewardRelabel(benchmark::State& state) {
  RewardModelConfig cfg;
  RewardEnsemble ens(4, 2, cfg);
  ReplayBuffer buf(4, 2, static_cast<std::size_t>(state.range(0)));
  for (int i = 0; i < state.range(0); ++i) {
    Transition t;
    t.state = Eigen::VectorXd::Random(4);
    t.action = Eigen::VectorXd::Random(2);
    t.next_state = t.state;
    buf.add(t, 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(buf.relabel(ens));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RewardRelabel)->Arg(10000);

void BM_KCenter(benchmark::State& state) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Random(200, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kcenter_select(f, 10));
}
BENCHMARK(BM_KCenter)->Arg(50)->Arg(500);

void BM_IntrinsicReward(benchmark::State& state) {
  const Eigen::MatrixXd set = Eigen::MatrixXd::Random(4, state.range(0));
  const Eigen::MatrixXd queries = Eigen::MatrixXd::Random(4, 64);
  for (auto _ : state) benchmark::DoNotOptimize(intrinsic_rewards(queries, set, 5));
}
BENCHMARK(BM_IntrinsicReward)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
