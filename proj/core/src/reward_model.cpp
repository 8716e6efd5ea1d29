#include "bpref/reward_model.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "bpref/numeric.hpp"

namespace bpref {

bool AnnotationStore::add(PreferenceRecord record) {
  if (record.label == Preference::kSkipped) return false;
  if (record.seg0.length() != record.seg1.length()) {
    throw std::invalid_argument("annotation store: segment lengths differ within a record");
  }
  if (!records_.empty() && records_.front().seg0.length() != record.seg0.length()) {
    throw std::invalid_argument("annotation store: all records must share the segment length");
  }
  if (capacity_ > 0 && records_.size() == capacity_) records_.erase(records_.begin());
  records_.push_back(std::move(record));
  return true;
}

Eigen::MatrixXd reward_inputs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  Eigen::MatrixXd in(states.rows() + actions.rows(), states.cols());
  in.topRows(states.rows()) = states;
  in.bottomRows(actions.rows()) = actions;
  return in;
}

std::array<double, 2> smooth_label(std::array<double, 2> y) {
  return {0.9 * y[0] + 0.05, 0.9 * y[1] + 0.05};
}

PreferenceLoss preference_loss(const Mlp& net, std::span<const PreferenceRecord* const> batch,
                               bool smoothing) {
  if (batch.empty()) throw std::invalid_argument("preference loss: empty minibatch");
  const Eigen::Index h = batch.front()->seg0.length();
  const Eigen::Index n = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index sd = batch.front()->seg0.states.rows();
  // Columns: [record k, seg0 steps][record k, seg1 steps] for k = 0..n-1.
  Eigen::MatrixXd inputs(net.input_dim(), 2 * n * h);
  for (Eigen::Index k = 0; k < n; ++k) {
    const PreferenceRecord& r = *batch[k];
    if (r.seg0.length() != h || r.seg1.length() != h) {
      throw std::invalid_argument("preference loss: mixed segment lengths in minibatch");
    }
    inputs.block(0, 2 * k * h, sd, h) = r.seg0.states;
    inputs.block(sd, 2 * k * h, net.input_dim() - sd, h) = r.seg0.actions;
    inputs.block(0, (2 * k + 1) * h, sd, h) = r.seg1.states;
    inputs.block(sd, (2 * k + 1) * h, net.input_dim() - sd, h) = r.seg1.actions;
  }
  Mlp::Tape tape;
  const Eigen::MatrixXd& out = net.forward(inputs, tape);

  PreferenceLoss result;
  Eigen::MatrixXd grad_out(1, 2 * n * h);
  long hard = 0;
  long correct = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto target = label_target(batch[k]->label);
    if (!target) throw std::invalid_argument("preference loss: skipped record in minibatch");
    const std::array<double, 2> y = smoothing ? smooth_label(*target) : *target;
    const double sum0 = out.block(0, 2 * k * h, 1, h).sum();
    const double sum1 = out.block(0, (2 * k + 1) * h, 1, h).sum();
    const double d = sum1 - sum0;  // logit of P[seg1 > seg0]
    result.loss += y[0] * softplus(d) + y[1] * softplus(-d);
    const double g = (logistic(d) - y[1]) / static_cast<double>(n);
    grad_out.block(0, 2 * k * h, 1, h).setConstant(-g);
    grad_out.block(0, (2 * k + 1) * h, 1, h).setConstant(g);
    if (batch[k]->label != Preference::kEqual) {
      ++hard;
      const bool predicts_second = d > 0.0;
      if (predicts_second == (batch[k]->label == Preference::kSecond)) ++correct;
    }
  }
  result.loss /= static_cast<double>(n);
  result.accuracy = hard > 0 ? static_cast<double>(correct) / hard : 1.0;
  result.gradient = zero_gradient(net);
  net.backward(tape, grad_out, &result.gradient);
  return result;
}

PreferenceLoss preference_loss(const Mlp& net, std::span<const PreferenceRecord> batch, bool smoothing) {
  std::vector<const PreferenceRecord*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& r : batch) ptrs.push_back(&r);
  return preference_loss(net, std::span<const PreferenceRecord* const>(ptrs), smoothing);
}

Mlp make_reward_network(int state_dim, int action_dim, const std::vector<int>& hidden) {
  std::vector<int> sizes{state_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return Mlp(sizes, Activation::kLeakyRelu, Activation::kTanh);
}

double TrainStats::mean_loss() const {
  if (members.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : members) s += m.final_loss;
  return s / members.size();
}

double TrainStats::mean_accuracy() const {
  if (members.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : members) s += m.accuracy;
  return s / members.size();
}

RewardEnsemble::RewardEnsemble(int state_dim, int action_dim, RewardModelConfig config)
    : state_dim_(state_dim), action_dim_(action_dim), config_(std::move(config)) {
  if (config_.ensemble_size < 1) throw std::invalid_argument("reward ensemble needs at least one member");
  reinitialize();
}

void RewardEnsemble::reinitialize() {
  members_.clear();
  optimizers_.clear();
  rngs_.clear();
  for (int i = 0; i < config_.ensemble_size; ++i) {
    const std::string tag = "reward_member_" + std::to_string(i) + "_gen_" + std::to_string(generation_);
    Rng init_rng(derive_seed(config_.seed, tag + "_init"));
    Mlp net = make_reward_network(state_dim_, action_dim_, config_.hidden);
    net.initialize(init_rng);
    optimizers_.emplace_back(net, AdamConfig{config_.learning_rate});
    members_.push_back(std::move(net));
    rngs_.emplace_back(derive_seed(config_.seed, tag + "_shuffle"));
  }
  ++generation_;
}

double RewardEnsemble::predict_reward(std::size_t member, const Eigen::VectorXd& state,
                                      const Eigen::VectorXd& action) const {
  if (state.size() != state_dim_ || action.size() != action_dim_) {
    throw std::invalid_argument("predict_reward: dimension mismatch");
  }
  Eigen::VectorXd in(state_dim_ + action_dim_);
  in << state, action;
  return members_.at(member).forward(in)(0, 0);
}

double RewardEnsemble::predict_reward(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  double s = 0.0;
  for (std::size_t i = 0; i < members_.size(); ++i) s += predict_reward(i, state, action);
  return s / static_cast<double>(members_.size());
}

Eigen::VectorXd RewardEnsemble::predict_rewards(std::size_t member, const Eigen::MatrixXd& inputs) const {
  if (inputs.rows() != state_dim_ + action_dim_) {
    throw std::invalid_argument("predict_rewards: dimension mismatch");
  }
  return members_.at(member).forward(inputs).row(0).transpose();
}

Eigen::VectorXd RewardEnsemble::predict_rewards(const Eigen::MatrixXd& inputs) const {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(inputs.cols());
  for (std::size_t i = 0; i < members_.size(); ++i) acc += predict_rewards(i, inputs);
  return acc / static_cast<double>(members_.size());
}

double RewardEnsemble::predict_preference(std::size_t member, const Segment& seg0, const Segment& seg1) const {
  if (seg0.length() != seg1.length()) throw std::invalid_argument("predict_preference: length mismatch");
  const double s0 = predict_rewards(member, reward_inputs(seg0.states, seg0.actions)).sum();
  const double s1 = predict_rewards(member, reward_inputs(seg1.states, seg1.actions)).sum();
  return logistic(s1 - s0);
}

double ensemble_disagreement(std::span<const double> p) {
  if (p.size() < 2) throw std::invalid_argument("disagreement needs an ensemble of size >= 2");
  // Shifted by the first value so identical members give exactly zero.
  const double n = static_cast<double>(p.size());
  double mean = 0.0;
  for (double v : p) mean += v - p.front();
  mean /= n;
  double var = 0.0;
  for (double v : p) var += (v - p.front() - mean) * (v - p.front() - mean);
  return var / n;
}

double RewardEnsemble::disagreement(const Segment& seg0, const Segment& seg1) const {
  if (members_.size() < 2) throw std::invalid_argument("disagreement needs an ensemble of size >= 2");
  std::vector<double> p;
  for (std::size_t i = 0; i < members_.size(); ++i) p.push_back(predict_preference(i, seg0, seg1));
  return ensemble_disagreement(p);
}

double RewardEnsemble::predictor_entropy(const Segment& seg0, const Segment& seg1, std::size_t member) const {
  return binary_entropy(predict_preference(member, seg0, seg1));
}

PreferenceLoss RewardEnsemble::loss_and_gradient(std::size_t member,
                                                 std::span<const PreferenceRecord> batch) const {
  return preference_loss(members_.at(member), batch, config_.label_smoothing);
}

TrainStats RewardEnsemble::train(const AnnotationStore& store, int epochs, int batch_size) {
  if (store.empty()) throw std::invalid_argument("reward training: empty annotation store");
  if (epochs < 1 || batch_size < 1) throw std::invalid_argument("reward training: bad epochs/batch size");
  const auto records = store.records();
  TrainStats stats;
  for (std::size_t m = 0; m < members_.size(); ++m) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    MemberTrainStats ms;
    for (int epoch = 0; epoch < epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rngs_[m].engine());
      double loss_sum = 0.0;
      double correct_sum = 0.0;
      for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        std::vector<const PreferenceRecord*> batch;
        for (std::size_t i = start; i < end; ++i) batch.push_back(&records[order[i]]);
        PreferenceLoss pl = preference_loss(members_[m], std::span<const PreferenceRecord* const>(batch),
                                            config_.label_smoothing);
        optimizers_[m].step(members_[m], pl.gradient);
        loss_sum += pl.loss * batch.size();
        correct_sum += pl.accuracy * batch.size();
      }
      ms.final_loss = loss_sum / records.size();
      ms.accuracy = correct_sum / records.size();
      ms.epochs_run = epoch + 1;
      if (config_.target_accuracy > 0.0 && ms.accuracy >= config_.target_accuracy) break;
    }
    stats.members.push_back(ms);
  }
  return stats;
}

nlohmann::json RewardEnsemble::to_json() const {
  nlohmann::json j;
  j["format"] = "bpref.reward_ensemble.v1";
  j["state_dim"] = state_dim_;
  j["action_dim"] = action_dim_;
  j["members"] = nlohmann::json::array();
  for (const auto& m : members_) j["members"].push_back(bpref::to_json(m));
  return j;
}

}  // namespace bpref
