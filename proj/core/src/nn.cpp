#include "bpref/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace bpref {

namespace {

void apply_activation(Activation a, Eigen::MatrixXd& m) {
  switch (a) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      m = m.cwiseMax(0.0);
      break;
    case Activation::kLeakyRelu:
      m = m.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
      break;
    case Activation::kTanh:
      m = m.array().tanh().matrix();
      break;
  }
}

// Multiplies the incoming gradient by the activation derivative, expressed
// through the post-activation value.
void apply_derivative(Activation a, const Eigen::MatrixXd& post, Eigen::MatrixXd& grad) {
  switch (a) {
    case Activation::kIdentity:
      break;
    case Activation::kRelu:
      grad = grad.cwiseProduct(post.unaryExpr([](double y) { return y > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::kLeakyRelu:
      grad = grad.cwiseProduct(post.unaryExpr([](double y) { return y > 0.0 ? 1.0 : kLeakySlope; }));
      break;
    case Activation::kTanh:
      grad = grad.cwiseProduct((1.0 - post.array().square()).matrix());
      break;
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity:
      return "identity";
    case Activation::kRelu:
      return "relu";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "identity") return Activation::kIdentity;
  if (name == "relu") return Activation::kRelu;
  if (name == "leaky_relu") return Activation::kLeakyRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

Mlp::Mlp(std::vector<int> sizes, Activation hidden, Activation output)
    : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (int s : sizes_) {
    if (s <= 0) throw std::invalid_argument("Mlp layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]),
                       Eigen::VectorXd::Zero(sizes_[l + 1])});
  }
}

void Mlp::initialize(Rng& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.cols()));
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.bias.setZero();
  }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
  if (input.rows() != input_dim()) throw std::invalid_argument("Mlp input dimension mismatch");
  Eigen::MatrixXd x = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = layers_[l].weight * x;
    z.colwise() += layers_[l].bias;
    apply_activation(l + 1 == layers_.size() ? output_ : hidden_, z);
    x = std::move(z);
  }
  return x;
}

const Eigen::MatrixXd& Mlp::forward(const Eigen::MatrixXd& input, Tape& tape) const {
  if (input.rows() != input_dim()) throw std::invalid_argument("Mlp input dimension mismatch");
  tape.outputs.resize(layers_.size() + 1);
  tape.outputs[0] = input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd& z = tape.outputs[l + 1];
    z.noalias() = layers_[l].weight * tape.outputs[l];
    z.colwise() += layers_[l].bias;
    apply_activation(l + 1 == layers_.size() ? output_ : hidden_, z);
  }
  return tape.outputs.back();
}

Eigen::MatrixXd Mlp::backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                              MlpGradient* grad) const {
  Eigen::MatrixXd delta = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    apply_derivative(l + 1 == layers_.size() ? output_ : hidden_, tape.outputs[l + 1], delta);
    if (grad != nullptr) {
      (*grad)[l].weight.noalias() += delta * tape.outputs[l].transpose();
      (*grad)[l].bias += delta.rowwise().sum();
    }
    Eigen::MatrixXd prev = layers_[l].weight.transpose() * delta;
    delta = std::move(prev);
  }
  return delta;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index k = 0;
  for (const auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat[k++] = layer.weight(r, c);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[k++] = layer.bias[r];
  }
  return flat;
}

void Mlp::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) {
    throw std::invalid_argument("parameter vector size does not match architecture");
  }
  Eigen::Index k = 0;
  for (auto& layer : layers_) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = flat[k++];
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias[r] = flat[k++];
  }
}

void Mlp::soft_update_from(const Mlp& source, double tau) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight = (1.0 - tau) * layers_[l].weight + tau * source.layers_[l].weight;
    layers_[l].bias = (1.0 - tau) * layers_[l].bias + tau * source.layers_[l].bias;
  }
}

MlpGradient zero_gradient(const Mlp& net) {
  MlpGradient g;
  for (const auto& layer : net.layers()) {
    g.push_back({Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
                 Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return g;
}

Eigen::VectorXd flatten(const MlpGradient& grad) {
  Eigen::Index n = 0;
  for (const auto& layer : grad) n += layer.weight.size() + layer.bias.size();
  Eigen::VectorXd flat(n);
  Eigen::Index k = 0;
  for (const auto& layer : grad) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) flat[k++] = layer.weight(r, c);
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) flat[k++] = layer.bias[r];
  }
  return flat;
}

Adam::Adam(const Mlp& net, AdamConfig config)
    : config_(config), first_(zero_gradient(net)), second_(zero_gradient(net)) {}

void Adam::step(Mlp& net, const MlpGradient& grad) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  const double lr = config_.learning_rate;
  const double eps = config_.epsilon;
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = config_.beta1 * m + (1.0 - config_.beta1) * g;
    v = config_.beta2 * v + (1.0 - config_.beta2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weight, first_[l].weight, second_[l].weight, grad[l].weight);
    update(layers[l].bias, first_[l].bias, second_[l].bias, grad[l].bias);
  }
}

VectorAdam::VectorAdam(Eigen::Index size, AdamConfig config)
    : config_(config), first_(Eigen::VectorXd::Zero(size)), second_(Eigen::VectorXd::Zero(size)) {}

void VectorAdam::step(Eigen::VectorXd& param, const Eigen::VectorXd& grad) {
  ++steps_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  first_ = config_.beta1 * first_ + (1.0 - config_.beta1) * grad;
  second_ = config_.beta2 * second_ + (1.0 - config_.beta2) * grad.cwiseProduct(grad);
  param.array() -= config_.learning_rate * (first_.array() / c1) /
                   ((second_.array() / c2).sqrt() + config_.epsilon);
}

nlohmann::json to_json(const Mlp& net) {
  nlohmann::json j;
  j["sizes"] = net.sizes();
  j["hidden"] = to_string(net.hidden_activation());
  j["output"] = to_string(net.output_activation());
  const Eigen::VectorXd p = net.parameters();
  j["parameters"] = std::vector<double>(p.data(), p.data() + p.size());
  return j;
}

Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net(j.at("sizes").get<std::vector<int>>(),
          activation_from_string(j.at("hidden").get<std::string>()),
          activation_from_string(j.at("output").get<std::string>()));
  const auto values = j.at("parameters").get<std::vector<double>>();
  net.set_parameters(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                       static_cast<Eigen::Index>(values.size())));
  return net;
}

}  // namespace bpref
