#include "policylab/followers/policy.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace policylab {

namespace {
thread_local std::vector<double> tl_out;
thread_local std::vector<double> tl_scratch;
thread_local std::vector<double> tl_probs;
}  // namespace

int sample_policy_action(const Mlp& net, std::span<const double> obs, Rng& rng) {
  mlp_forward(net, obs, tl_out, tl_scratch);
  tl_probs.resize(tl_out.size());
  softmax(tl_out, tl_probs);
  return sample_categorical(tl_probs, rng);
}

int IndependentPolicy::act(int agent, std::span<const double> obs, Rng& rng) const {
  return sample_policy_action(nets_[agent], obs, rng);
}

GridPolicy GridPolicy::init(int obs_dim, int tail_dim, int n_actions, int feature_dim,
                            int head_hidden, Rng& rng) {
  GridPolicy p;
  p.trunk_in = obs_dim - tail_dim;
  if (p.trunk_in <= 0) throw std::invalid_argument("observation shorter than its tail");
  p.trunk = Mlp::init(MlpSpec{{p.trunk_in, feature_dim}, true}, rng);
  p.actor = Mlp::init(MlpSpec{{feature_dim + tail_dim, head_hidden, n_actions}, false}, rng, 0.01);
  p.critic = Mlp::init(MlpSpec{{feature_dim + tail_dim, head_hidden, 1}, false}, rng);
  return p;
}

void GridPolicy::logits_value(std::span<const double> obs, std::vector<double>& logits,
                              double* value, std::vector<double>& scratch) const {
  thread_local std::vector<double> features;
  thread_local std::vector<double> head_in;
  mlp_forward(trunk, obs.subspan(0, trunk_in), features, scratch);
  head_in.assign(features.begin(), features.end());
  head_in.insert(head_in.end(), obs.begin() + trunk_in, obs.end());
  mlp_forward(actor, head_in, logits, scratch);
  if (value) {
    thread_local std::vector<double> v;
    mlp_forward(critic, head_in, v, scratch);
    *value = v[0];
  }
}

nlohmann::json GridPolicy::to_json() const {
  nlohmann::json j;
  j["trunk"] = trunk.to_json();
  j["actor"] = actor.to_json();
  j["critic"] = critic.to_json();
  j["trunk_in"] = trunk_in;
  return j;
}

GridPolicy GridPolicy::from_json(const nlohmann::json& j) {
  GridPolicy p;
  p.trunk = Mlp::from_json(j.at("trunk"));
  p.actor = Mlp::from_json(j.at("actor"));
  p.critic = Mlp::from_json(j.at("critic"));
  p.trunk_in = j.at("trunk_in").get<int>();
  return p;
}

int SharedGridJointPolicy::act(int agent, std::span<const double> obs, Rng& rng) const {
  (void)agent;  // the id is already part of the observation tail
  thread_local std::vector<double> logits;
  thread_local std::vector<double> scratch;
  thread_local std::vector<double> probs;
  policy_.logits_value(obs, logits, nullptr, scratch);
  probs.resize(logits.size());
  softmax(logits, probs);
  return sample_categorical(probs, rng);
}

}  // namespace policylab
