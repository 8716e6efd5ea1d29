#include <doctest.h>

#include <cmath>

#include "bpref/nn.hpp"
#include "bpref/numeric.hpp"
#include "bpref/random.hpp"

using namespace bpref;

TEST_CASE("derive_seed is stable per name and separates streams") {
  CHECK(derive_seed(7, "teacher") == derive_seed(7, "teacher"));
  CHECK(derive_seed(7, "teacher") != derive_seed(7, "sampler"));
  CHECK(derive_seed(7, "teacher") != derive_seed(8, "teacher"));
  Rng a(derive_seed(3, "x"));
  Rng b(derive_seed(3, "x"));
  for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
}

TEST_CASE("stable scalar helpers") {
  CHECK(logistic(0.0) == doctest::Approx(0.5));
  CHECK(logistic(800.0) == 1.0);
  CHECK(logistic(-800.0) == 0.0);
  CHECK(std::isfinite(softplus(800.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  for (double x : {-30.0, -2.0, 0.0, 1.5, 30.0}) {
    CHECK(softplus(x) == doctest::Approx(std::log(1.0 + std::exp(x))).epsilon(1e-12));
    CHECK(logistic(x) + logistic(-x) == doctest::Approx(1.0));
  }
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)));
}

namespace {

double scalar_loss(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
  return (net.forward(x).array() * w.array()).sum();
}

}  // namespace

TEST_CASE("mlp backward matches central differences for every activation") {
  for (Activation hidden : {Activation::kRelu, Activation::kLeakyRelu, Activation::kTanh}) {
    for (Activation out : {Activation::kIdentity, Activation::kTanh}) {
      Rng rng(11);
      Mlp net({3, 5, 4, 2}, hidden, out);
      net.initialize(rng);
      // Non-zero biases keep pre-activations off the ReLU kink.
      Eigen::VectorXd init = net.parameters();
      for (Eigen::Index i = 0; i < init.size(); ++i) init[i] += 0.1 * rng.normal();
      net.set_parameters(init);
      Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 6);
      Eigen::MatrixXd w = Eigen::MatrixXd::Random(2, 6);
      Mlp::Tape tape;
      net.forward(x, tape);
      MlpGradient g = zero_gradient(net);
      const Eigen::MatrixXd gin = net.backward(tape, w, &g);
      const Eigen::VectorXd analytic = flatten(g);
      Eigen::VectorXd p = net.parameters();
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < p.size(); ++i) {
        Mlp probe = net;
        Eigen::VectorXd q = p;
        q[i] += h;
        probe.set_parameters(q);
        const double up = scalar_loss(probe, x, w);
        q[i] -= 2 * h;
        probe.set_parameters(q);
        const double down = scalar_loss(probe, x, w);
        CHECK(analytic[i] == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5).scale(1.0));
      }
      for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
          Eigen::MatrixXd xp = x;
          xp(r, c) += h;
          const double up = scalar_loss(net, xp, w);
          xp(r, c) -= 2 * h;
          const double down = scalar_loss(net, xp, w);
          CHECK(gin(r, c) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-5).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("parameter round trip and soft update") {
  Rng rng(2);
  Mlp a({4, 8, 1}, Activation::kRelu, Activation::kIdentity);
  Mlp b({4, 8, 1}, Activation::kRelu, Activation::kIdentity);
  a.initialize(rng);
  b.initialize(rng);
  CHECK(a.parameter_count() == static_cast<std::size_t>(4 * 8 + 8 + 8 + 1));
  Mlp c = a;
  c.set_parameters(a.parameters());
  CHECK((c.parameters() - a.parameters()).norm() == 0.0);
  const Eigen::VectorXd expected = 0.9 * a.parameters() + 0.1 * b.parameters();
  a.soft_update_from(b, 0.1);
  CHECK((a.parameters() - expected).norm() < 1e-12);
  CHECK_THROWS(a.set_parameters(Eigen::VectorXd::Zero(3)));
}

TEST_CASE("adam reduces a quadratic") {
  Rng rng(5);
  Mlp net({2, 1}, Activation::kIdentity, Activation::kIdentity);
  net.initialize(rng);
  Adam opt(net, AdamConfig{0.05});
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, 32);
  Eigen::RowVectorXd y = 3.0 * x.row(0) - 2.0 * x.row(1);
  auto loss = [&] { return (net.forward(x) - y).squaredNorm() / 32.0; };
  const double before = loss();
  for (int i = 0; i < 500; ++i) {
    Mlp::Tape tape;
    const Eigen::MatrixXd out = net.forward(x, tape);
    MlpGradient g = zero_gradient(net);
    net.backward(tape, 2.0 * (out - y) / 32.0, &g);
    opt.step(net, g);
  }
  CHECK(loss() < 1e-3 * before);
  CHECK(opt.steps() == 500);
}

TEST_CASE("mlp json round trip") {
  Rng rng(9);
  Mlp net({3, 4, 2}, Activation::kLeakyRelu, Activation::kTanh);
  net.initialize(rng);
  const Mlp back = mlp_from_json(to_json(net));
  CHECK(back.sizes() == net.sizes());
  CHECK(back.hidden_activation() == Activation::kLeakyRelu);
  CHECK((back.parameters() - net.parameters()).norm() == 0.0);
}
