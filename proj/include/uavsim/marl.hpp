#pragma once

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsim/nn.hpp"
#include "uavsim/rng.hpp"
#include "uavsim/world.hpp"

namespace uavsim::marl {

enum class Method { Proposed, Random, Comp1, Comp2 };

std::string to_string(Method m);
Method method_from_string(const std::string& s);  // throws std::invalid_argument

// How the per-layer communication vector is averaged: over the other
// agents' hiddens (standard), or over every non-leader hidden including
// one's own (the alternative reading, selectable for comparison).
enum class CommMean { ExcludeSelf, ExcludeLeader };

std::string to_string(CommMean m);
CommMean comm_mean_from_string(const std::string& s);

// Raised when a checkpoint's stored topology does not match the
// configuration it is loaded under.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Communication policy: per-input encoder, L communication stages that mix
// each hidden with the mean of the others', and a concat+softmax head over
// the action space. All stages share weights across inputs.
struct CommNetParams {
  nn::DenseLayer encoder;             // obs_dim -> hidden, ReLU
  std::vector<nn::DenseLayer> comm;   // 2*hidden -> hidden, ReLU
  nn::DenseLayer head;                // inputs*hidden -> actions, Softmax
  int inputs = 0;                     // observation count consumed per forward
  CommMean mean_mode = CommMean::ExcludeSelf;

  int hidden() const { return encoder.fan_out(); }
  int obs_dim() const { return encoder.fan_in(); }
  int actions() const { return head.fan_out(); }
  void validate() const;

  static CommNetParams make(int obs_dim, int hidden, int comm_layers, int inputs,
                            int actions, CommMean mean_mode, Rng& rng);
};

struct CommNetGrads {
  nn::LayerGrad encoder;
  std::vector<nn::LayerGrad> comm;
  nn::LayerGrad head;

  static CommNetGrads zeros_like(const CommNetParams& p);
  void zero();
};

struct CommNetCache {
  std::vector<std::vector<double>> obs;                   // inputs copy
  std::vector<std::vector<std::vector<double>>> h;        // (L+1) x F x hidden
  std::vector<std::vector<std::vector<double>>> z;        // (L+1) x F pre-activations
  std::vector<std::vector<std::vector<double>>> c;        // L x F comm vectors
  std::vector<double> head_z;
  std::vector<double> out;
};

// Forward over F = params.inputs observations; returns the action
// distribution. Throws std::invalid_argument on a wrong observation count.
const std::vector<double>& commnet_forward(const CommNetParams& p,
                                           std::span<const std::vector<double>> obs,
                                           CommNetCache& cache);
std::vector<double> commnet_forward(const CommNetParams& p,
                                    std::span<const std::vector<double>> obs);

// Reverse pass; upstream is dL/d(head logits). Accumulates into grads.
void commnet_backward(const CommNetParams& p, const CommNetCache& cache,
                      std::span<const double> dlogits, CommNetGrads& grads);

struct CommNetAdam {
  nn::AdamHyper hyper;
  long long t = 0;
  nn::AdamLayerState encoder;
  std::vector<nn::AdamLayerState> comm;
  nn::AdamLayerState head;

  static CommNetAdam for_params(const CommNetParams& p, const nn::AdamHyper& hyper = {});
};

void adam_step(CommNetParams& p, const CommNetGrads& g, CommNetAdam& s);

// Same dense-layer convention as nn::flops_count; the per-layer averaging
// is not counted (it is not a dense stage).
long long commnet_flops(const CommNetParams& p);

// Epsilon-greedy over a distribution: uniform with probability epsilon,
// otherwise the argmax (ties to the lowest index).
int select_action(std::span<const double> dist, double epsilon, Rng& rng);

// Critic input encoding: concat(S, one-hot per-agent actions[, one-hot
// agent index when the critic is shared across agents]).
void encode_critic_input(std::span<const double> s, std::span<const int> actions,
                         int n_actions, int agent_index, int m_agents,
                         std::vector<double>& out);

// Q(S, A[, agent]) through the given critic net.
double critic_q(const nn::MlpParams& critic, std::span<const double> s,
                std::span<const int> actions, int n_actions, int agent_index,
                int m_agents);

// Bootstrapped TD target; terminal transitions do not bootstrap.
double compute_target(double r, bool done, double gamma, double q_next);

struct Transition {
  std::vector<double> s;        // concat of all M agent observations
  std::vector<int> actions;     // per agent
  std::vector<double> rewards;  // per-agent total reward
  std::vector<double> s_next;
  bool done = false;
};

// Bounded ring with uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void push(Transition t);
  size_t size() const { return data_.size(); }
  size_t inserted() const { return inserted_; }
  const Transition& at(size_t i) const { return data_[i]; }

  // Uniform with replacement.
  std::vector<size_t> sample_indices(size_t count, Rng& rng) const;

 private:
  size_t capacity_;
  size_t next_ = 0;
  size_t inserted_ = 0;
  std::vector<Transition> data_;
};

struct TrainConfig {
  double gamma = 0.99;
  double lr = 0.001;
  int batch_size = 32;
  int buffer_capacity = 50000;
  int warmup = 1000;
  double eps_start = 1.0;
  double eps_end = 0.05;
  double eps_decay_frac = 0.6;  // fraction of epochs over which epsilon anneals
  double entropy_coef = 0.01;   // actor entropy bonus; keeps the softmax from saturating
  int target_update_cycle = 20;
  int epochs = 50000;
  uint64_t seed = 1;
  int hidden = 64;
  int dense_layers = 6;  // policy/critic depth; commnet uses dense_layers - 2 comm stages
  int train_every = 1;   // env steps between updates
  CommMean comm_mean = CommMean::ExcludeSelf;
  bool share_followers = true;
  bool per_agent_critic = false;
  int eval_episodes = 20;
  int checkpoint_every = 1000;
  bool step_records = false;

  void validate() const;
  double epsilon_at(int epoch) const;
  int comm_layers() const { return dense_layers - 2; }
};

// Standard feed-forward policy: dense_layers stages of `hidden` width,
// ReLU on all but the last, Softmax output over the action space.
nn::MlpParams make_policy_net(int obs_dim, int hidden, int dense_layers,
                              int actions, Rng& rng);
nn::MlpParams make_critic_net(int in_dim, int hidden, int dense_layers, Rng& rng);

// Per-method total cost from per-policy forward costs.
long long method_flops(Method m, long long dnn_flops, long long commnet_flops,
                       int m_agents);

// Actors, critic, targets, optimizer states and the replay buffer for one
// method. Training follows the centralized-critic loop: TD targets from
// target nets, critic regression, score-function actor ascent weighted by
// the critic's value.
class Trainer {
 public:
  Trainer(Method method, const world::WorldConfig& wcfg, const TrainConfig& tcfg);

  // One action per agent; obs holds all M agent observations.
  std::vector<int> act(const std::vector<std::vector<double>>& obs, double epsilon,
                       Rng& rng) const;
  // Greedy joint action under the target actors (used for TD targets).
  std::vector<int> greedy_target_actions(std::span<const double> s) const;

  // Action distribution of agent m given all M observations.
  std::vector<double> policy_distribution(int agent, const std::vector<std::vector<double>>& obs) const;

  void store(Transition t) { buffer_.push(std::move(t)); }
  bool ready() const;
  bool trainable() const { return method_ != Method::Random; }

  // Samples a mini-batch and applies one critic step and one step per
  // actor group; returns the critic loss. Throws std::logic_error before
  // the buffer reaches the warm-up fill.
  double train_step(Rng& rng);

  void sync_targets();

  void save(const std::string& path) const;
  // Throws CheckpointError when the stored topology or method disagrees
  // with this trainer's configuration.
  void load(const std::string& path);

  long long dnn_policy_flops() const;
  long long commnet_policy_flops() const;
  long long flops() const;

  const ReplayBuffer& buffer() const { return buffer_; }
  const TrainConfig& train_config() const { return tcfg_; }
  Method method() const { return method_; }
  int obs_dim() const { return obs_dim_; }
  int m_agents() const { return m_agents_; }

  // Direct access for tests.
  std::vector<nn::MlpParams>& followers() { return followers_; }
  std::vector<CommNetParams>& commnets() { return commnets_; }
  std::vector<nn::MlpParams>& critics() { return critics_; }
  const std::vector<nn::MlpParams>& target_followers() const { return t_followers_; }
  const std::vector<CommNetParams>& target_commnets() const { return t_commnets_; }
  const std::vector<nn::MlpParams>& target_critics() const { return t_critics_; }

 private:
  const nn::MlpParams& follower_net(int agent) const;
  const CommNetParams& commnet_net(int agent) const;
  const nn::MlpParams& critic_net(int agent) const;
  const nn::MlpParams& target_critic_net(int agent) const;
  std::vector<std::vector<double>> commnet_inputs(int agent,
                                                  std::span<const double> s) const;
  std::span<const double> obs_slice(std::span<const double> s, int agent) const;
  int critic_agent_index(int agent) const {
    return tcfg_.per_agent_critic ? -1 : agent;
  }

  Method method_;
  TrainConfig tcfg_;
  int m_agents_;
  int obs_dim_;
  int n_follower_agents_ = 0;  // agents acting through the plain policy net
  int critic_in_dim_ = 0;

  std::vector<nn::MlpParams> followers_, t_followers_;
  std::vector<CommNetParams> commnets_, t_commnets_;
  std::vector<nn::MlpParams> critics_, t_critics_;
  std::vector<nn::AdamState> follower_opt_, critic_opt_;
  std::vector<CommNetAdam> commnet_opt_;
  ReplayBuffer buffer_;
};

}  // namespace uavsim::marl
