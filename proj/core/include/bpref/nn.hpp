#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <string>
#include <vector>

#include "bpref/random.hpp"

namespace bpref {

enum class Activation { kIdentity, kRelu, kLeakyRelu, kTanh };

inline constexpr double kLeakySlope = 0.01;

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Same shape as the network's layers; holds dL/dW and dL/db.
using MlpGradient = std::vector<DenseLayer>;

// Fully connected network operating on column batches: an input matrix is
// (input_dim x batch) and every column is one sample.
class Mlp {
 public:
  // Post-activation values of every layer, outputs[0] being the input.
  struct Tape {
    std::vector<Eigen::MatrixXd> outputs;
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden, Activation output);

  // Fan-in scaled uniform weights, zero biases.
  void initialize(Rng& rng);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;
  const Eigen::MatrixXd& forward(const Eigen::MatrixXd& input, Tape& tape) const;

  // Backpropagates dL/d(output) through a recorded pass. Parameter gradients
  // are accumulated into `grad` when it is non-null; returns dL/d(input).
  Eigen::MatrixXd backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                           MlpGradient* grad) const;

  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  std::size_t parameter_count() const;
  // Flat layout: per layer, the weight matrix row-major followed by the bias.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);

  // this <- (1 - tau) * this + tau * source
  void soft_update_from(const Mlp& source, double tau);

 private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::kRelu;
  Activation output_ = Activation::kIdentity;
  std::vector<DenseLayer> layers_;
};

MlpGradient zero_gradient(const Mlp& net);
Eigen::VectorXd flatten(const MlpGradient& grad);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig config);

  void step(Mlp& net, const MlpGradient& grad);
  long steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  long steps_ = 0;
  MlpGradient first_;
  MlpGradient second_;
};

// Adam for a free parameter vector (e.g. a state-independent log std).
class VectorAdam {
 public:
  VectorAdam() = default;
  VectorAdam(Eigen::Index size, AdamConfig config);
  void step(Eigen::VectorXd& param, const Eigen::VectorXd& grad);

 private:
  AdamConfig config_;
  long steps_ = 0;
  Eigen::VectorXd first_;
  Eigen::VectorXd second_;
};

// Checkpoint format: {"sizes": [...], "hidden": "...", "output": "...",
// "parameters": [flat row-major values]}.
nlohmann::json to_json(const Mlp& net);
Mlp mlp_from_json(const nlohmann::json& j);

}  // namespace bpref
