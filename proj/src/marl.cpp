#include "uavsim/marl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace uavsim::marl {

std::string to_string(Method m) {
  switch (m) {
    case Method::Proposed: return "Proposed";
    case Method::Random: return "Random";
    case Method::Comp1: return "Comp1";
    case Method::Comp2: return "Comp2";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  std::string k;
  for (char c : s) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "proposed") return Method::Proposed;
  if (k == "random") return Method::Random;
  if (k == "comp1") return Method::Comp1;
  if (k == "comp2") return Method::Comp2;
  throw std::invalid_argument("unknown method: " + s);
}

std::string to_string(CommMean m) {
  return m == CommMean::ExcludeSelf ? "exclude-self" : "exclude-leader";
}

CommMean comm_mean_from_string(const std::string& s) {
  if (s == "exclude-self") return CommMean::ExcludeSelf;
  if (s == "exclude-leader") return CommMean::ExcludeLeader;
  throw std::invalid_argument("unknown comm_mean: " + s);
}

void CommNetParams::validate() const {
  if (inputs < 1) throw std::invalid_argument("commnet: inputs must be >= 1");
  const int H = encoder.fan_out();
  if (H < 1) throw std::invalid_argument("commnet: empty encoder");
  for (const nn::DenseLayer& l : comm) {
    if (l.fan_in() != 2 * H || l.fan_out() != H) {
      throw std::invalid_argument("commnet: comm layer must map 2*hidden -> hidden");
    }
  }
  if (head.fan_in() != inputs * H) {
    throw std::invalid_argument("commnet: head fan-in must be inputs*hidden");
  }
  if (head.act != nn::Activation::Softmax) {
    throw std::invalid_argument("commnet: head must be softmax");
  }
}

CommNetParams CommNetParams::make(int obs_dim, int hidden, int comm_layers,
                                  int inputs, int actions, CommMean mean_mode,
                                  Rng& rng) {
  CommNetParams p;
  p.inputs = inputs;
  p.mean_mode = mean_mode;
  p.encoder = {nn::xavier_init(hidden, obs_dim, rng),
               std::vector<double>(hidden, 0.0), nn::Activation::ReLU};
  for (int l = 0; l < comm_layers; ++l) {
    p.comm.push_back({nn::xavier_init(hidden, 2 * hidden, rng),
                      std::vector<double>(hidden, 0.0), nn::Activation::ReLU});
  }
  p.head = {nn::xavier_init(actions, inputs * hidden, rng),
            std::vector<double>(actions, 0.0), nn::Activation::Softmax};
  p.validate();
  return p;
}

CommNetGrads CommNetGrads::zeros_like(const CommNetParams& p) {
  CommNetGrads g;
  g.encoder = {nn::Matrix::zeros(p.encoder.w.rows, p.encoder.w.cols),
               std::vector<double>(p.encoder.b.size(), 0.0)};
  for (const nn::DenseLayer& l : p.comm) {
    g.comm.push_back({nn::Matrix::zeros(l.w.rows, l.w.cols),
                      std::vector<double>(l.b.size(), 0.0)});
  }
  g.head = {nn::Matrix::zeros(p.head.w.rows, p.head.w.cols),
            std::vector<double>(p.head.b.size(), 0.0)};
  return g;
}

void CommNetGrads::zero() {
  auto clear = [](nn::LayerGrad& l) {
    std::fill(l.w.data.begin(), l.w.data.end(), 0.0);
    std::fill(l.b.begin(), l.b.end(), 0.0);
  };
  clear(encoder);
  for (nn::LayerGrad& l : comm) clear(l);
  clear(head);
}

namespace {

void relu_from(const std::vector<double>& z, std::vector<double>& h) {
  h.resize(z.size());
  for (size_t i = 0; i < z.size(); ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
}

// grad.w += dz (x) in, grad.b += dz, and optionally dx += W^T dz
void accumulate_layer(const nn::DenseLayer& l, const std::vector<double>& in,
                      const std::vector<double>& dz, nn::LayerGrad& grad,
                      std::vector<double>* dx) {
  const int rows = l.w.rows;
  const int cols = l.w.cols;
  for (int r = 0; r < rows; ++r) {
    double* gw = grad.w.data.data() + static_cast<size_t>(r) * cols;
    const double d = dz[r];
    for (int c = 0; c < cols; ++c) gw[c] += d * in[c];
    grad.b[r] += d;
  }
  if (dx != nullptr) {
    for (int r = 0; r < rows; ++r) {
      const double* wr = l.w.data.data() + static_cast<size_t>(r) * cols;
      const double d = dz[r];
      for (int c = 0; c < cols; ++c) (*dx)[c] += wr[c] * d;
    }
  }
}

int argmax_index(std::span<const double> v) {
  int best = 0;
  for (size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = static_cast<int>(i);
  }
  return best;
}

}  // namespace

const std::vector<double>& commnet_forward(const CommNetParams& p,
                                           std::span<const std::vector<double>> obs,
                                           CommNetCache& cache) {
  const int F = p.inputs;
  if (static_cast<int>(obs.size()) != F) {
    throw std::invalid_argument("commnet: expected " + std::to_string(F) +
                                " observations, got " + std::to_string(obs.size()));
  }
  const int H = p.hidden();
  const int L = static_cast<int>(p.comm.size());
  cache.obs.assign(obs.begin(), obs.end());
  cache.h.assign(L + 1, std::vector<std::vector<double>>(F));
  cache.z.assign(L + 1, std::vector<std::vector<double>>(F));
  cache.c.assign(L, std::vector<std::vector<double>>(F));

  for (int m = 0; m < F; ++m) {
    nn::affine(p.encoder, obs[m], cache.z[0][m]);
    relu_from(cache.z[0][m], cache.h[0][m]);
  }

  std::vector<double> sum(H), cat(2 * H);
  for (int l = 0; l < L; ++l) {
    std::fill(sum.begin(), sum.end(), 0.0);
    for (int m = 0; m < F; ++m) {
      for (int k = 0; k < H; ++k) sum[k] += cache.h[l][m][k];
    }
    for (int m = 0; m < F; ++m) {
      std::vector<double>& c = cache.c[l][m];
      c.assign(H, 0.0);
      if (p.mean_mode == CommMean::ExcludeSelf) {
        // Direct sum over the others keeps c_m exactly independent of
        // input m; a single input has nothing to average.
        if (F > 1) {
          for (int o = 0; o < F; ++o) {
            if (o == m) continue;
            for (int k = 0; k < H; ++k) c[k] += cache.h[l][o][k];
          }
          for (int k = 0; k < H; ++k) c[k] /= (F - 1);
        }
      } else {
        for (int k = 0; k < H; ++k) c[k] = sum[k] / F;
      }
      std::copy(cache.h[l][m].begin(), cache.h[l][m].end(), cat.begin());
      std::copy(c.begin(), c.end(), cat.begin() + H);
      nn::affine(p.comm[l], cat, cache.z[l + 1][m]);
      relu_from(cache.z[l + 1][m], cache.h[l + 1][m]);
    }
  }

  std::vector<double> head_in(static_cast<size_t>(F) * H);
  for (int m = 0; m < F; ++m) {
    std::copy(cache.h[L][m].begin(), cache.h[L][m].end(),
              head_in.begin() + static_cast<size_t>(m) * H);
  }
  nn::affine(p.head, head_in, cache.head_z);
  cache.out = cache.head_z;
  nn::softmax_inplace(cache.out);
  return cache.out;
}

std::vector<double> commnet_forward(const CommNetParams& p,
                                    std::span<const std::vector<double>> obs) {
  CommNetCache cache;
  commnet_forward(p, obs, cache);
  return cache.out;
}

void commnet_backward(const CommNetParams& p, const CommNetCache& cache,
                      std::span<const double> dlogits, CommNetGrads& grads) {
  const int F = p.inputs;
  const int H = p.hidden();
  const int L = static_cast<int>(p.comm.size());
  if (static_cast<int>(dlogits.size()) != p.actions()) {
    throw std::invalid_argument("commnet backward: logit grad width mismatch");
  }

  // Head: input is the concat of final hiddens.
  std::vector<double> head_in(static_cast<size_t>(F) * H);
  for (int m = 0; m < F; ++m) {
    std::copy(cache.h[L][m].begin(), cache.h[L][m].end(),
              head_in.begin() + static_cast<size_t>(m) * H);
  }
  std::vector<double> dz(dlogits.begin(), dlogits.end());
  std::vector<double> dcat_head(head_in.size(), 0.0);
  accumulate_layer(p.head, head_in, dz, grads.head, &dcat_head);

  std::vector<std::vector<double>> dh(F, std::vector<double>(H));
  for (int m = 0; m < F; ++m) {
    std::copy(dcat_head.begin() + static_cast<size_t>(m) * H,
              dcat_head.begin() + static_cast<size_t>(m + 1) * H, dh[m].begin());
  }

  std::vector<double> cat(2 * H), dzl(H), dcat(2 * H);
  std::vector<std::vector<double>> dh_prev(F, std::vector<double>(H));
  std::vector<std::vector<double>> dc(F, std::vector<double>(H));
  std::vector<double> sum_dc(H);
  for (int l = L - 1; l >= 0; --l) {
    for (int m = 0; m < F; ++m) {
      std::fill(dh_prev[m].begin(), dh_prev[m].end(), 0.0);
    }
    for (int m = 0; m < F; ++m) {
      const std::vector<double>& z = cache.z[l + 1][m];
      for (int k = 0; k < H; ++k) dzl[k] = z[k] > 0.0 ? dh[m][k] : 0.0;
      std::copy(cache.h[l][m].begin(), cache.h[l][m].end(), cat.begin());
      std::copy(cache.c[l][m].begin(), cache.c[l][m].end(), cat.begin() + H);
      std::fill(dcat.begin(), dcat.end(), 0.0);
      accumulate_layer(p.comm[l], cat, dzl, grads.comm[l], &dcat);
      for (int k = 0; k < H; ++k) dh_prev[m][k] += dcat[k];
      std::copy(dcat.begin() + H, dcat.end(), dc[m].begin());
    }
    std::fill(sum_dc.begin(), sum_dc.end(), 0.0);
    for (int m = 0; m < F; ++m) {
      for (int k = 0; k < H; ++k) sum_dc[k] += dc[m][k];
    }
    if (p.mean_mode == CommMean::ExcludeSelf) {
      if (F > 1) {
        for (int m = 0; m < F; ++m) {
          for (int k = 0; k < H; ++k) {
            dh_prev[m][k] += (sum_dc[k] - dc[m][k]) / (F - 1);
          }
        }
      }
    } else {
      for (int m = 0; m < F; ++m) {
        for (int k = 0; k < H; ++k) dh_prev[m][k] += sum_dc[k] / F;
      }
    }
    dh.swap(dh_prev);
  }

  for (int m = 0; m < F; ++m) {
    const std::vector<double>& z = cache.z[0][m];
    dzl.resize(H);
    for (int k = 0; k < H; ++k) dzl[k] = z[k] > 0.0 ? dh[m][k] : 0.0;
    accumulate_layer(p.encoder, cache.obs[m], dzl, grads.encoder, nullptr);
  }
}

CommNetAdam CommNetAdam::for_params(const CommNetParams& p, const nn::AdamHyper& hyper) {
  CommNetAdam s;
  s.hyper = hyper;
  auto make_state = [](const nn::DenseLayer& l) {
    return nn::AdamLayerState{nn::Matrix::zeros(l.w.rows, l.w.cols),
                              nn::Matrix::zeros(l.w.rows, l.w.cols),
                              std::vector<double>(l.b.size(), 0.0),
                              std::vector<double>(l.b.size(), 0.0)};
  };
  s.encoder = make_state(p.encoder);
  for (const nn::DenseLayer& l : p.comm) s.comm.push_back(make_state(l));
  s.head = make_state(p.head);
  return s;
}

void adam_step(CommNetParams& p, const CommNetGrads& g, CommNetAdam& s) {
  ++s.t;
  nn::adam_update_layer(p.encoder, g.encoder, s.encoder, s.hyper, s.t);
  for (size_t l = 0; l < p.comm.size(); ++l) {
    nn::adam_update_layer(p.comm[l], g.comm[l], s.comm[l], s.hyper, s.t);
  }
  nn::adam_update_layer(p.head, g.head, s.head, s.hyper, s.t);
}

long long commnet_flops(const CommNetParams& p) {
  long long total = nn::layer_flops(p.encoder.fan_in(), p.encoder.fan_out(), p.encoder.act) *
                    p.inputs;
  for (const nn::DenseLayer& l : p.comm) {
    total += nn::layer_flops(l.fan_in(), l.fan_out(), l.act) * p.inputs;
  }
  total += nn::layer_flops(p.head.fan_in(), p.head.fan_out(), p.head.act);
  return total;
}

int select_action(std::span<const double> dist, double epsilon, Rng& rng) {
  if (dist.empty()) throw std::invalid_argument("select_action: empty distribution");
  if (epsilon > 0.0 && rng.bernoulli(epsilon)) {
    return static_cast<int>(rng.uniform_index(dist.size()));
  }
  return argmax_index(dist);
}

void encode_critic_input(std::span<const double> s, std::span<const int> actions,
                         int n_actions, int agent_index, int m_agents,
                         std::vector<double>& out) {
  const size_t base = s.size();
  const size_t dim = base + static_cast<size_t>(m_agents) * n_actions +
                     (agent_index >= 0 ? static_cast<size_t>(m_agents) : 0);
  out.assign(dim, 0.0);
  std::copy(s.begin(), s.end(), out.begin());
  if (static_cast<int>(actions.size()) != m_agents) {
    throw std::invalid_argument("critic encoding: one action per agent required");
  }
  for (int m = 0; m < m_agents; ++m) {
    if (actions[m] < 0 || actions[m] >= n_actions) {
      throw std::invalid_argument("critic encoding: action index out of range");
    }
    out[base + static_cast<size_t>(m) * n_actions + actions[m]] = 1.0;
  }
  if (agent_index >= 0) {
    if (agent_index >= m_agents) {
      throw std::invalid_argument("critic encoding: agent index out of range");
    }
    out[base + static_cast<size_t>(m_agents) * n_actions + agent_index] = 1.0;
  }
}

double critic_q(const nn::MlpParams& critic, std::span<const double> s,
                std::span<const int> actions, int n_actions, int agent_index,
                int m_agents) {
  std::vector<double> input;
  encode_critic_input(s, actions, n_actions, agent_index, m_agents, input);
  return nn::forward(critic, input)[0];
}

double compute_target(double r, bool done, double gamma, double q_next) {
  return done ? r : r + gamma * q_next;
}

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer: zero capacity");
}

void ReplayBuffer::push(Transition t) {
  if (data_.size() < capacity_) {
    data_.push_back(std::move(t));
  } else {
    data_[next_] = std::move(t);
  }
  next_ = (next_ + 1) % capacity_;
  ++inserted_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t count, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("replay buffer: sampling from empty buffer");
  std::vector<size_t> idx(count);
  for (size_t i = 0; i < count; ++i) idx[i] = rng.uniform_index(data_.size());
  return idx;
}

void TrainConfig::validate() const {
  if (gamma <= 0.0 || gamma >= 1.0) throw std::invalid_argument("train: gamma must be in (0, 1)");
  if (lr < 0.0) throw std::invalid_argument("train: lr must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (buffer_capacity < 1) throw std::invalid_argument("train: buffer_capacity must be >= 1");
  if (warmup < 1 || warmup > buffer_capacity) {
    throw std::invalid_argument("train: warmup must be in [1, buffer_capacity]");
  }
  if (eps_start < 0.0 || eps_start > 1.0 || eps_end < 0.0 || eps_end > 1.0 ||
      eps_end > eps_start) {
    throw std::invalid_argument("train: epsilon schedule must satisfy 0 <= end <= start <= 1");
  }
  if (eps_decay_frac < 0.0 || eps_decay_frac > 1.0) {
    throw std::invalid_argument("train: eps_decay_frac must be in [0, 1]");
  }
  if (entropy_coef < 0.0) throw std::invalid_argument("train: entropy_coef must be >= 0");
  if (target_update_cycle < 1) throw std::invalid_argument("train: target cycle must be >= 1");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (hidden < 1) throw std::invalid_argument("train: hidden must be >= 1");
  if (dense_layers < 3) throw std::invalid_argument("train: dense_layers must be >= 3");
  if (train_every < 1) throw std::invalid_argument("train: train_every must be >= 1");
  if (eval_episodes < 1) throw std::invalid_argument("train: eval_episodes must be >= 1");
  if (checkpoint_every < 1) throw std::invalid_argument("train: checkpoint_every must be >= 1");
}

double TrainConfig::epsilon_at(int epoch) const {
  const double window = eps_decay_frac * epochs;
  if (window <= 0.0) return eps_end;
  const double frac = std::min(1.0, static_cast<double>(epoch) / window);
  return eps_start + (eps_end - eps_start) * frac;
}

nn::MlpParams make_policy_net(int obs_dim, int hidden, int dense_layers,
                              int actions, Rng& rng) {
  std::vector<int> dims;
  dims.push_back(obs_dim);
  for (int i = 0; i < dense_layers - 1; ++i) dims.push_back(hidden);
  dims.push_back(actions);
  return nn::make_mlp(dims, nn::Activation::ReLU, nn::Activation::Softmax, rng);
}

nn::MlpParams make_critic_net(int in_dim, int hidden, int dense_layers, Rng& rng) {
  std::vector<int> dims;
  dims.push_back(in_dim);
  for (int i = 0; i < dense_layers - 1; ++i) dims.push_back(hidden);
  dims.push_back(1);
  return nn::make_mlp(dims, nn::Activation::ReLU, nn::Activation::Identity, rng);
}

long long method_flops(Method m, long long dnn_flops, long long commnet_flops,
                       int m_agents) {
  switch (m) {
    case Method::Proposed: return commnet_flops + (m_agents - 1) * dnn_flops;
    case Method::Random: return 0;
    case Method::Comp1: return static_cast<long long>(m_agents) * dnn_flops;
    case Method::Comp2: return static_cast<long long>(m_agents) * commnet_flops;
  }
  return 0;
}

Trainer::Trainer(Method method, const world::WorldConfig& wcfg, const TrainConfig& tcfg)
    : method_(method),
      tcfg_(tcfg),
      m_agents_(wcfg.m_agents),
      obs_dim_(world::World::observation_dim(wcfg)),
      buffer_(static_cast<size_t>(tcfg.buffer_capacity)) {
  tcfg_.validate();
  const int A = world::kNumActions;
  Rng init(derive_seed(tcfg_.seed, "policy-init"));

  switch (method_) {
    case Method::Proposed: n_follower_agents_ = m_agents_ - 1; break;
    case Method::Comp1: n_follower_agents_ = m_agents_; break;
    default: n_follower_agents_ = 0; break;
  }
  if (n_follower_agents_ > 0) {
    const int nets = tcfg_.share_followers ? 1 : n_follower_agents_;
    for (int i = 0; i < nets; ++i) {
      followers_.push_back(
          make_policy_net(obs_dim_, tcfg_.hidden, tcfg_.dense_layers, A, init));
    }
  }
  if (method_ == Method::Proposed || method_ == Method::Comp2) {
    commnets_.push_back(CommNetParams::make(obs_dim_, tcfg_.hidden, tcfg_.comm_layers(),
                                            m_agents_ - 1, A, tcfg_.comm_mean, init));
  }
  if (trainable()) {
    critic_in_dim_ = m_agents_ * obs_dim_ + m_agents_ * A +
                     (tcfg_.per_agent_critic ? 0 : m_agents_);
    const int n_critics = tcfg_.per_agent_critic ? m_agents_ : 1;
    for (int i = 0; i < n_critics; ++i) {
      critics_.push_back(
          make_critic_net(critic_in_dim_, tcfg_.hidden, tcfg_.dense_layers, init));
    }
  }

  t_followers_ = followers_;
  t_commnets_ = commnets_;
  t_critics_ = critics_;

  const nn::AdamHyper hyper{tcfg_.lr, 0.9, 0.999, 1e-8};
  for (const nn::MlpParams& p : followers_) {
    follower_opt_.push_back(nn::AdamState::for_params(p, hyper));
  }
  for (const CommNetParams& p : commnets_) {
    commnet_opt_.push_back(CommNetAdam::for_params(p, hyper));
  }
  for (const nn::MlpParams& p : critics_) {
    critic_opt_.push_back(nn::AdamState::for_params(p, hyper));
  }
}

const nn::MlpParams& Trainer::follower_net(int agent) const {
  return followers_[tcfg_.share_followers ? 0 : agent];
}

const CommNetParams& Trainer::commnet_net(int agent) const {
  (void)agent;
  return commnets_[0];
}

const nn::MlpParams& Trainer::critic_net(int agent) const {
  return critics_[tcfg_.per_agent_critic ? agent : 0];
}

const nn::MlpParams& Trainer::target_critic_net(int agent) const {
  return t_critics_[tcfg_.per_agent_critic ? agent : 0];
}

std::span<const double> Trainer::obs_slice(std::span<const double> s, int agent) const {
  return s.subspan(static_cast<size_t>(agent) * obs_dim_, obs_dim_);
}

std::vector<std::vector<double>> Trainer::commnet_inputs(int agent,
                                                         std::span<const double> s) const {
  std::vector<std::vector<double>> inputs;
  inputs.reserve(m_agents_ - 1);
  if (method_ == Method::Proposed) {
    // Leader consumes the followers' observations.
    for (int m = 0; m < m_agents_ - 1; ++m) {
      const auto sl = obs_slice(s, m);
      inputs.emplace_back(sl.begin(), sl.end());
    }
  } else {
    // Each agent consumes every other agent's observation.
    for (int m = 0; m < m_agents_; ++m) {
      if (m == agent) continue;
      const auto sl = obs_slice(s, m);
      inputs.emplace_back(sl.begin(), sl.end());
    }
  }
  return inputs;
}

std::vector<double> Trainer::policy_distribution(
    int agent, const std::vector<std::vector<double>>& obs) const {
  const int A = world::kNumActions;
  switch (method_) {
    case Method::Random:
      return std::vector<double>(A, 1.0 / A);
    case Method::Comp1:
      return nn::forward(follower_net(agent), obs[agent]);
    case Method::Comp2: {
      std::vector<std::vector<double>> inputs;
      inputs.reserve(m_agents_ - 1);
      for (int m = 0; m < m_agents_; ++m) {
        if (m != agent) inputs.push_back(obs[m]);
      }
      return commnet_forward(commnet_net(agent), inputs);
    }
    case Method::Proposed:
      if (agent == m_agents_ - 1) {
        std::vector<std::vector<double>> inputs(obs.begin(), obs.end() - 1);
        return commnet_forward(commnet_net(agent), inputs);
      }
      return nn::forward(follower_net(agent), obs[agent]);
  }
  return std::vector<double>(A, 1.0 / A);
}

std::vector<int> Trainer::act(const std::vector<std::vector<double>>& obs,
                              double epsilon, Rng& rng) const {
  if (static_cast<int>(obs.size()) != m_agents_) {
    throw std::invalid_argument("act: one observation per agent required");
  }
  std::vector<int> actions(m_agents_);
  if (method_ == Method::Random) {
    for (int m = 0; m < m_agents_; ++m) {
      actions[m] = static_cast<int>(rng.uniform_index(world::kNumActions));
    }
    return actions;
  }
  for (int m = 0; m < m_agents_; ++m) {
    const std::vector<double> dist = policy_distribution(m, obs);
    actions[m] = select_action(dist, epsilon, rng);
  }
  return actions;
}

std::vector<int> Trainer::greedy_target_actions(std::span<const double> s) const {
  std::vector<int> actions(m_agents_, 0);
  for (int m = 0; m < m_agents_; ++m) {
    std::vector<double> dist;
    switch (method_) {
      case Method::Random:
        actions[m] = 0;
        continue;
      case Method::Comp1:
        dist = nn::forward(t_followers_[tcfg_.share_followers ? 0 : m], obs_slice(s, m));
        break;
      case Method::Comp2:
        dist = commnet_forward(t_commnets_[0], commnet_inputs(m, s));
        break;
      case Method::Proposed:
        if (m == m_agents_ - 1) {
          dist = commnet_forward(t_commnets_[0], commnet_inputs(m, s));
        } else {
          dist = nn::forward(t_followers_[tcfg_.share_followers ? 0 : m], obs_slice(s, m));
        }
        break;
    }
    actions[m] = argmax_index(dist);
  }
  return actions;
}

bool Trainer::ready() const {
  return buffer_.size() >= static_cast<size_t>(tcfg_.warmup);
}

double Trainer::train_step(Rng& rng) {
  if (!trainable()) throw std::logic_error("train step: method has no trainable parameters");
  if (!ready()) throw std::logic_error("train step: replay buffer below warm-up fill");
  const int A = world::kNumActions;
  const std::vector<size_t> idx = buffer_.sample_indices(tcfg_.batch_size, rng);
  const size_t B = idx.size();

  // TD targets under the target networks; terminal steps do not bootstrap.
  std::vector<std::vector<double>> y(B, std::vector<double>(m_agents_));
  for (size_t i = 0; i < B; ++i) {
    const Transition& tr = buffer_.at(idx[i]);
    std::vector<int> next_a;
    if (!tr.done) next_a = greedy_target_actions(tr.s_next);
    for (int m = 0; m < m_agents_; ++m) {
      double q_next = 0.0;
      if (!tr.done) {
        q_next = critic_q(target_critic_net(m), tr.s_next, next_a, A,
                          critic_agent_index(m), m_agents_);
      }
      y[i][m] = compute_target(tr.rewards[m], tr.done, tcfg_.gamma, q_next);
    }
  }

  // Critic regression. Alongside each sampled Q(s,a) the critic is probed
  // at agent m's six alternative actions (others held fixed); their mean is
  // the state-conditional baseline for the actor step, so the coefficient
  // scores the action rather than the state.
  std::vector<nn::MlpGrads> cgrads;
  cgrads.reserve(critics_.size());
  for (const nn::MlpParams& c : critics_) cgrads.push_back(nn::MlpGrads::zeros_like(c));
  const double denom = static_cast<double>(B) * m_agents_;
  std::vector<std::vector<double>> q_sa(B, std::vector<double>(m_agents_));
  std::vector<std::vector<double>> q_base(B, std::vector<double>(m_agents_));
  nn::ForwardCache cache;
  std::vector<double> input;
  std::vector<int> probe_actions;
  double loss = 0.0;
  for (size_t i = 0; i < B; ++i) {
    const Transition& tr = buffer_.at(idx[i]);
    for (int m = 0; m < m_agents_; ++m) {
      const nn::MlpParams& net = critic_net(m);
      probe_actions = tr.actions;
      double q_mean = 0.0;
      for (int a = 0; a < A; ++a) {
        if (a == tr.actions[m]) continue;
        probe_actions[m] = a;
        encode_critic_input(tr.s, probe_actions, A, critic_agent_index(m), m_agents_,
                            input);
        nn::forward(net, input, cache);
        q_mean += cache.output[0];
      }
      encode_critic_input(tr.s, tr.actions, A, critic_agent_index(m), m_agents_, input);
      nn::forward(net, input, cache);
      const double q = cache.output[0];
      q_sa[i][m] = q;
      q_base[i][m] = (q_mean + q) / A;
      const double diff = q - y[i][m];
      loss += diff * diff;
      const double up = 2.0 * diff / denom;
      nn::backward(net, cache, std::span<const double>(&up, 1),
                   cgrads[tcfg_.per_agent_critic ? m : 0]);
    }
  }
  loss /= denom;
  for (size_t c = 0; c < critics_.size(); ++c) {
    nn::adam_step(critics_[c], cgrads[c], critic_opt_[c]);
  }

  std::vector<double> dlogits(A);
  // Minimized per-sample actor loss: -adv*log pi(a) - entropy_coef*H(pi).
  const auto fill_dlogits = [&](const std::vector<double>& pi, int action, double coef) {
    double entropy = 0.0;
    for (double p : pi) {
      if (p > 0.0) entropy -= p * std::log(p);
    }
    const double beta = tcfg_.entropy_coef / static_cast<double>(B);
    for (int k = 0; k < A; ++k) {
      const double logp = std::log(std::max(pi[k], 1e-300));
      dlogits[k] = coef * (pi[k] - (k == action ? 1.0 : 0.0)) +
                   beta * pi[k] * (logp + entropy);
    }
  };
  if (!followers_.empty()) {
    std::vector<nn::MlpGrads> fgrads;
    fgrads.reserve(followers_.size());
    for (const nn::MlpParams& f : followers_) fgrads.push_back(nn::MlpGrads::zeros_like(f));
    for (size_t i = 0; i < B; ++i) {
      const Transition& tr = buffer_.at(idx[i]);
      for (int m = 0; m < n_follower_agents_; ++m) {
        const nn::MlpParams& net = follower_net(m);
        nn::forward(net, obs_slice(tr.s, m), cache);
        const double coef = (q_sa[i][m] - q_base[i][m]) / static_cast<double>(B);
        fill_dlogits(cache.output, tr.actions[m], coef);
        nn::backward(net, cache, dlogits, fgrads[tcfg_.share_followers ? 0 : m], nullptr,
                     /*upstream_wrt_logits=*/true);
      }
    }
    for (size_t f = 0; f < followers_.size(); ++f) {
      nn::adam_step(followers_[f], fgrads[f], follower_opt_[f]);
    }
  }
  if (!commnets_.empty()) {
    CommNetGrads g = CommNetGrads::zeros_like(commnets_[0]);
    CommNetCache cc;
    const int first = method_ == Method::Proposed ? m_agents_ - 1 : 0;
    const int last = m_agents_ - 1;
    for (size_t i = 0; i < B; ++i) {
      const Transition& tr = buffer_.at(idx[i]);
      for (int m = first; m <= last; ++m) {
        commnet_forward(commnets_[0], commnet_inputs(m, tr.s), cc);
        const double coef = (q_sa[i][m] - q_base[i][m]) / static_cast<double>(B);
        fill_dlogits(cc.out, tr.actions[m], coef);
        commnet_backward(commnets_[0], cc, dlogits, g);
      }
    }
    adam_step(commnets_[0], g, commnet_opt_[0]);
  }
  return loss;
}

void Trainer::sync_targets() {
  t_followers_ = followers_;
  t_commnets_ = commnets_;
  t_critics_ = critics_;
}

long long Trainer::dnn_policy_flops() const {
  long long total = nn::layer_flops(obs_dim_, tcfg_.hidden, nn::Activation::ReLU);
  for (int i = 0; i < tcfg_.dense_layers - 2; ++i) {
    total += nn::layer_flops(tcfg_.hidden, tcfg_.hidden, nn::Activation::ReLU);
  }
  total += nn::layer_flops(tcfg_.hidden, world::kNumActions, nn::Activation::Softmax);
  return total;
}

long long Trainer::commnet_policy_flops() const {
  const int F = m_agents_ - 1;
  long long total =
      static_cast<long long>(F) * nn::layer_flops(obs_dim_, tcfg_.hidden, nn::Activation::ReLU);
  for (int i = 0; i < tcfg_.comm_layers(); ++i) {
    total += static_cast<long long>(F) *
             nn::layer_flops(2 * tcfg_.hidden, tcfg_.hidden, nn::Activation::ReLU);
  }
  total += nn::layer_flops(F * tcfg_.hidden, world::kNumActions, nn::Activation::Softmax);
  return total;
}

long long Trainer::flops() const {
  return method_flops(method_, dnn_policy_flops(), commnet_policy_flops(), m_agents_);
}

namespace {

constexpr char kCkptMagic[8] = {'U', 'V', 'S', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void wpod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T rpod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("checkpoint: truncated file");
  return v;
}

void write_commnet(std::ostream& out, const CommNetParams& p) {
  wpod<uint32_t>(out, static_cast<uint32_t>(p.inputs));
  wpod<uint8_t>(out, static_cast<uint8_t>(p.mean_mode));
  nn::write_layer(out, p.encoder);
  wpod<uint32_t>(out, static_cast<uint32_t>(p.comm.size()));
  for (const nn::DenseLayer& l : p.comm) nn::write_layer(out, l);
  nn::write_layer(out, p.head);
}

CommNetParams read_commnet(std::istream& in) {
  CommNetParams p;
  p.inputs = static_cast<int>(rpod<uint32_t>(in));
  p.mean_mode = static_cast<CommMean>(rpod<uint8_t>(in));
  try {
    p.encoder = nn::read_layer(in);
    const uint32_t n = rpod<uint32_t>(in);
    if (n > 1024) throw CheckpointError("checkpoint: bad comm layer count");
    for (uint32_t i = 0; i < n; ++i) p.comm.push_back(nn::read_layer(in));
    p.head = nn::read_layer(in);
  } catch (const std::runtime_error& e) {
    throw CheckpointError(e.what());
  }
  return p;
}

bool same_topology(const nn::MlpParams& a, const nn::MlpParams& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].w.rows != b.layers[i].w.rows ||
        a.layers[i].w.cols != b.layers[i].w.cols || a.layers[i].act != b.layers[i].act) {
      return false;
    }
  }
  return true;
}

bool same_topology(const CommNetParams& a, const CommNetParams& b) {
  if (a.inputs != b.inputs || a.comm.size() != b.comm.size()) return false;
  auto same_layer = [](const nn::DenseLayer& x, const nn::DenseLayer& y) {
    return x.w.rows == y.w.rows && x.w.cols == y.w.cols && x.act == y.act;
  };
  if (!same_layer(a.encoder, b.encoder) || !same_layer(a.head, b.head)) return false;
  for (size_t i = 0; i < a.comm.size(); ++i) {
    if (!same_layer(a.comm[i], b.comm[i])) return false;
  }
  return true;
}

}  // namespace

void Trainer::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path);
  out.write(kCkptMagic, sizeof(kCkptMagic));
  wpod<uint32_t>(out, 1);  // format version
  wpod<uint8_t>(out, static_cast<uint8_t>(method_));
  wpod<uint32_t>(out, static_cast<uint32_t>(m_agents_));
  wpod<uint32_t>(out, static_cast<uint32_t>(obs_dim_));
  wpod<uint32_t>(out, static_cast<uint32_t>(world::kNumActions));
  auto write_group = [&out](const std::vector<nn::MlpParams>& nets) {
    wpod<uint32_t>(out, static_cast<uint32_t>(nets.size()));
    for (const nn::MlpParams& p : nets) nn::write_mlp(out, p);
  };
  auto write_cgroup = [&out](const std::vector<CommNetParams>& nets) {
    wpod<uint32_t>(out, static_cast<uint32_t>(nets.size()));
    for (const CommNetParams& p : nets) write_commnet(out, p);
  };
  write_group(followers_);
  write_cgroup(commnets_);
  write_group(critics_);
  write_group(t_followers_);
  write_cgroup(t_commnets_);
  write_group(t_critics_);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

void Trainer::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + 8, kCkptMagic)) {
    throw CheckpointError("checkpoint: bad magic in " + path);
  }
  const uint32_t version = rpod<uint32_t>(in);
  if (version != 1) throw CheckpointError("checkpoint: unsupported version");
  const auto method = static_cast<Method>(rpod<uint8_t>(in));
  const int m_agents = static_cast<int>(rpod<uint32_t>(in));
  const int obs_dim = static_cast<int>(rpod<uint32_t>(in));
  const int actions = static_cast<int>(rpod<uint32_t>(in));
  if (method != method_ || m_agents != m_agents_ || obs_dim != obs_dim_ ||
      actions != world::kNumActions) {
    throw CheckpointError("checkpoint: stored topology does not match configuration");
  }
  auto read_group = [&in](std::vector<nn::MlpParams>& nets, const char* what) {
    const uint32_t n = rpod<uint32_t>(in);
    if (n != nets.size()) {
      throw CheckpointError(std::string("checkpoint: ") + what + " count mismatch");
    }
    for (uint32_t i = 0; i < n; ++i) {
      nn::MlpParams p;
      try {
        p = nn::read_mlp(in);
      } catch (const std::runtime_error& e) {
        throw CheckpointError(e.what());
      }
      if (!same_topology(p, nets[i])) {
        throw CheckpointError(std::string("checkpoint: ") + what + " topology mismatch");
      }
      nets[i] = std::move(p);
    }
  };
  auto read_cgroup = [&in](std::vector<CommNetParams>& nets, const char* what) {
    const uint32_t n = rpod<uint32_t>(in);
    if (n != nets.size()) {
      throw CheckpointError(std::string("checkpoint: ") + what + " count mismatch");
    }
    for (uint32_t i = 0; i < n; ++i) {
      CommNetParams p = read_commnet(in);
      if (!same_topology(p, nets[i])) {
        throw CheckpointError(std::string("checkpoint: ") + what + " topology mismatch");
      }
      // The stored mean mode is what the weights were trained under.
      nets[i] = std::move(p);
    }
  };
  read_group(followers_, "follower");
  read_cgroup(commnets_, "commnet");
  read_group(critics_, "critic");
  read_group(t_followers_, "target follower");
  read_cgroup(t_commnets_, "target commnet");
  read_group(t_critics_, "target critic");
}

}  // namespace uavsim::marl
