#include "uavsim/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace uavsim::world {

void WorldConfig::validate() const {
  if (n_ues < 1) throw std::invalid_argument("world: n_ues must be >= 1");
  if (m_agents < 2) throw std::invalid_argument("world: need a leader plus at least one follower");
  if (k_nonagents < 0) throw std::invalid_argument("world: k_nonagents must be >= 0");
  if (grid_x_m <= 0.0 || grid_y_m <= 0.0 || grid_z_m <= 0.0) {
    throw std::invalid_argument("world: grid dims must be > 0");
  }
  if (altitude_levels_m.empty() ||
      !std::is_sorted(altitude_levels_m.begin(), altitude_levels_m.end())) {
    throw std::invalid_argument("world: altitude levels must be sorted ascending");
  }
  if (beamwidth_deg <= 0.0 || beamwidth_deg >= 180.0) {
    throw std::invalid_argument("world: beamwidth must be in (0, 180)");
  }
  if (step_dt_s <= 0.0) throw std::invalid_argument("world: step_dt_s must be > 0");
  if (episode_steps < 1) throw std::invalid_argument("world: episode_steps must be >= 1");
  if (uav_speed_mps <= 0.0) throw std::invalid_argument("world: uav_speed_mps must be > 0");
  if (malfunction_prob < 0.0 || malfunction_prob > 1.0) {
    throw std::invalid_argument("world: malfunction_prob must be in [0, 1]");
  }
  if (obs_radius_m < 0.0) throw std::invalid_argument("world: obs_radius_m must be >= 0");
  if (ue_max_speed_mps < 0.0) throw std::invalid_argument("world: ue_max_speed_mps must be >= 0");
  if (ue_place_mean_m <= 0.0) throw std::invalid_argument("world: ue_place_mean_m must be > 0");
  if (ue_alt_mean_m <= 0.0) throw std::invalid_argument("world: ue_alt_mean_m must be > 0");
  if (overlap_samples < 1) throw std::invalid_argument("world: overlap_samples must be >= 1");
  if (battery_joules <= 0.0) throw std::invalid_argument("world: battery_joules must be > 0");
  if (service_weights.size() != radio::kNumServiceTypes) {
    throw std::invalid_argument("world: service_weights needs one entry per service type");
  }
  double wsum = 0.0;
  for (double w : service_weights) {
    if (w < 0.0) throw std::invalid_argument("world: service weights must be >= 0");
    wsum += w;
  }
  if (wsum <= 0.0) throw std::invalid_argument("world: service weights sum to zero");
}

void RadioParams::validate() const {
  budget.validate();
  pattern.validate();
  mcs.validate();
}

World::World(WorldConfig cfg, RadioParams radio_params, EnergyParams energy_params)
    : cfg_(std::move(cfg)), radio_(std::move(radio_params)), energy_(energy_params) {
  cfg_.validate();
  radio_.validate();
  energy_.power.validate();
  hover_w_ = energy::hover_power_w(energy_.power);
  cruise_w_ = energy::cruise_power_w(cfg_.uav_speed_mps, energy_.power,
                                     energy_.cruise_formula);
  noise_mw_ = radio::noise_mw(radio_.budget);
  reset(0);
}

double World::clamp_axis(double v, double hi) const { return std::clamp(v, 0.0, hi); }

void World::place_ues() {
  ues_.clear();
  ues_.reserve(cfg_.n_ues);
  double wsum = 0.0;
  for (double w : cfg_.service_weights) wsum += w;
  for (int n = 0; n < cfg_.n_ues; ++n) {
    UeState ue;
    ue.pos.x = std::min(world_rng_.exponential(cfg_.ue_place_mean_m), cfg_.grid_x_m);
    ue.pos.y = std::min(world_rng_.exponential(cfg_.ue_place_mean_m), cfg_.grid_y_m);
    ue.pos.z = std::min(world_rng_.exponential(cfg_.ue_alt_mean_m), cfg_.grid_z_m);
    const double pick = world_rng_.uniform01() * wsum;
    double acc = 0.0;
    int svc = 0;
    for (int s = 0; s < radio::kNumServiceTypes; ++s) {
      acc += cfg_.service_weights[s];
      if (pick < acc) {
        svc = s;
        break;
      }
    }
    ue.service = static_cast<radio::ServiceType>(svc);
    ues_.push_back(std::move(ue));
  }
}

void World::reset(uint64_t episode_index) {
  world_rng_ = Rng(derive_seed(cfg_.seed, "world", episode_index));
  malf_rng_ = Rng(derive_seed(cfg_.seed, "malfunction", episode_index));
  step_ = 0;

  const double cx = cfg_.grid_x_m / 2.0;
  const double cy = cfg_.grid_y_m / 2.0;
  const double mid_alt = cfg_.altitude_levels_m[cfg_.altitude_levels_m.size() / 2];

  uavs_.clear();
  uavs_.reserve(cfg_.m_agents + cfg_.k_nonagents);
  for (int m = 0; m < cfg_.m_agents; ++m) {
    UavState u;
    u.id = m;
    u.kind = (m == cfg_.m_agents - 1) ? UavKind::LeaderAgent : UavKind::Agent;
    u.pos = {cx, cy, mid_alt};
    u.energy = energy::EnergyQueue::full(cfg_.battery_joules);
    uavs_.push_back(u);
  }
  for (int k = 0; k < cfg_.k_nonagents; ++k) {
    UavState u;
    u.id = cfg_.m_agents + k;
    u.kind = UavKind::NonAgent;
    const double angle = 2.0 * M_PI * k / cfg_.k_nonagents;
    u.pos = {clamp_axis(cx + cfg_.nonagent_ring_m * std::cos(angle), cfg_.grid_x_m),
             clamp_axis(cy + cfg_.nonagent_ring_m * std::sin(angle), cfg_.grid_y_m),
             cfg_.nonagent_alt_m};
    u.energy = energy::EnergyQueue::full(cfg_.battery_joules);
    uavs_.push_back(u);
  }

  place_ues();
  refresh_links();
}

bool World::apply_action(UavState& u, Action a) const {
  if (!u.alive || !u.is_agent()) return false;
  const double stride = cfg_.uav_speed_mps * cfg_.step_dt_s;
  switch (a) {
    case Action::Hover:
      break;
    case Action::XPlus:
      u.pos.x = clamp_axis(u.pos.x + stride, cfg_.grid_x_m);
      break;
    case Action::XMinus:
      u.pos.x = clamp_axis(u.pos.x - stride, cfg_.grid_x_m);
      break;
    case Action::YPlus:
      u.pos.y = clamp_axis(u.pos.y + stride, cfg_.grid_y_m);
      break;
    case Action::YMinus:
      u.pos.y = clamp_axis(u.pos.y - stride, cfg_.grid_y_m);
      break;
    case Action::ZUp:
      for (double level : cfg_.altitude_levels_m) {
        if (level > u.pos.z + 1e-9) {
          u.pos.z = level;
          break;
        }
      }
      break;
    case Action::ZDown:
      for (auto it = cfg_.altitude_levels_m.rbegin(); it != cfg_.altitude_levels_m.rend(); ++it) {
        if (*it < u.pos.z - 1e-9) {
          u.pos.z = *it;
          break;
        }
      }
      break;
  }
  const double power = (a == Action::Hover) ? hover_w_ : cruise_w_;
  u.energy = energy::queue_step(u.energy, power, cfg_.step_dt_s);
  if (u.energy.q_joules <= 0.0) u.alive = false;  // battery empty: down
  return true;
}

void World::move_ues() {
  for (UeState& ue : ues_) {
    const double heading = world_rng_.uniform(0.0, 2.0 * M_PI);
    const double speed = world_rng_.uniform(0.0, cfg_.ue_max_speed_mps);
    ue.velocity = {speed * std::cos(heading), speed * std::sin(heading), 0.0};
    ue.pos.x = clamp_axis(ue.pos.x + ue.velocity.x * cfg_.step_dt_s, cfg_.grid_x_m);
    ue.pos.y = clamp_axis(ue.pos.y + ue.velocity.y * cfg_.step_dt_s, cfg_.grid_y_m);
  }
}

void World::refresh_links() {
  const int n_uav = static_cast<int>(uavs_.size());
  ue_rate_mbps_.assign(ues_.size(), 0.0);
  ue_quality_.assign(ues_.size(), 0.0);
  served_count_.assign(n_uav, 0);

  // Each UE attaches to the strongest live UAV whose footprint covers it;
  // ties go to the lowest id (strict > keeps the first maximum).
  for (UeState& ue : ues_) {
    ue.served_by.reset();
    double best_rx = -std::numeric_limits<double>::infinity();
    for (const UavState& u : uavs_) {
      if (!u.alive) continue;
      const double r = radio::coverage_radius_m(u.pos.z, ue.pos.z, cfg_.beamwidth_deg,
                                                radio_.coverage_formula);
      if (r <= 0.0) continue;
      if (horizontal_distance(u.pos, ue.pos) > r) continue;
      const double rx = radio::rx_power_dbm(distance(u.pos, ue.pos), radio_.budget);
      if (rx > best_rx) {
        best_rx = rx;
        ue.served_by = u.id;
      }
    }
  }

  // Active directional links, one per served UE.
  std::vector<radio::LinkGeometry> links;
  std::vector<int> link_server;
  std::vector<size_t> ue_link;  // index into links, or npos
  constexpr size_t npos = static_cast<size_t>(-1);
  ue_link.assign(ues_.size(), npos);
  for (size_t n = 0; n < ues_.size(); ++n) {
    if (!ues_[n].served_by) continue;
    const UavState& server = uavs_[*ues_[n].served_by];
    radio::LinkGeometry link;
    link.tx_pos = server.pos;
    link.rx_pos = ues_[n].pos;
    link.tx_boresight = (ues_[n].pos - server.pos).normalized();
    ue_link[n] = links.size();
    links.push_back(link);
    link_server.push_back(server.id);
    ++served_count_[server.id];
  }

  // Per-link achievable rate: MCS lookup on Rx power, capped by the
  // interference-limited Shannon capacity. Links sharing a transmitter are
  // scheduled by it and do not interfere with each other.
  std::vector<radio::LinkGeometry> interferers;
  for (size_t n = 0; n < ues_.size(); ++n) {
    if (ue_link[n] == npos) continue;
    const int server = link_server[ue_link[n]];
    interferers.clear();
    for (size_t j = 0; j < links.size(); ++j) {
      if (link_server[j] != server) interferers.push_back(links[j]);
    }
    const double d = distance(uavs_[server].pos, ues_[n].pos);
    const double rx_dbm = radio::rx_power_dbm(d, radio_.budget);
    const double interf = radio::interference_mw(links[ue_link[n]], interferers,
                                                 radio_.budget, radio_.pattern);
    const double cap_mbps =
        radio::capacity_bps(radio::dbm_to_mw(rx_dbm), interf, noise_mw_,
                            radio_.budget.bandwidth_hz) / 1e6;
    const double rate = std::min(radio::mcs_rate_mbps(rx_dbm, radio_.mcs), cap_mbps);
    ue_rate_mbps_[n] = rate;
    ue_quality_[n] = radio::quality(rate, ues_[n].service, radio_.quality);
  }

  tau_ = support_rate();
  omega_ = overlap_degree();
}

double World::support_rate() const {
  int served = 0;
  for (const UeState& ue : ues_) {
    if (ue.served_by) ++served;
  }
  return static_cast<double>(served) / static_cast<double>(ues_.size());
}

double World::overlap_degree() const {
  struct Disk {
    double x, y, r;
  };
  std::vector<Disk> disks;
  for (const UavState& u : uavs_) {
    if (!u.alive) continue;
    const double r = radio::coverage_radius_m(u.pos.z, 0.0, cfg_.beamwidth_deg,
                                              radio_.coverage_formula);
    if (r > 0.0) disks.push_back({u.pos.x, u.pos.y, r});
  }
  if (disks.empty()) return 0.0;

  double x0 = std::numeric_limits<double>::max(), x1 = std::numeric_limits<double>::lowest();
  double y0 = x0, y1 = x1;
  for (const Disk& d : disks) {
    x0 = std::min(x0, d.x - d.r);
    x1 = std::max(x1, d.x + d.r);
    y0 = std::min(y0, d.y - d.r);
    y1 = std::max(y1, d.y + d.r);
  }
  x0 = std::max(x0, 0.0);
  y0 = std::max(y0, 0.0);
  x1 = std::min(x1, cfg_.grid_x_m);
  y1 = std::min(y1, cfg_.grid_y_m);
  if (x1 <= x0 || y1 <= y0) return 0.0;

  // Deterministic raster over the footprint bounding box.
  const int n = std::max(1, static_cast<int>(std::ceil(
                                  std::sqrt(static_cast<double>(cfg_.overlap_samples)))));
  const double dx = (x1 - x0) / n;
  const double dy = (y1 - y0) / n;
  long long union_cells = 0, multi_cells = 0, all_cells = 0;
  for (int i = 0; i < n; ++i) {
    const double px = x0 + (i + 0.5) * dx;
    for (int j = 0; j < n; ++j) {
      const double py = y0 + (j + 0.5) * dy;
      int covered = 0;
      for (const Disk& d : disks) {
        const double ddx = px - d.x;
        const double ddy = py - d.y;
        if (ddx * ddx + ddy * ddy <= d.r * d.r) ++covered;
      }
      if (covered >= 1) ++union_cells;
      if (covered >= 2) ++multi_cells;
      if (covered == static_cast<int>(disks.size())) ++all_cells;
    }
  }
  if (union_cells == 0) return 0.0;
  if (cfg_.overlap_formula == OverlapFormula::AsPrinted) {
    return 1.0 - static_cast<double>(all_cells) / static_cast<double>(union_cells);
  }
  return static_cast<double>(multi_cells) / static_cast<double>(union_cells);
}

double World::reward_energy(int agent_id) const {
  const UavState& u = uavs_[agent_id];
  const double e = cfg_.energy_reward_mode == EnergyRewardMode::Normalized
                       ? u.energy.fraction()
                       : u.energy.q_joules;
  return std::max(0.0, e);
}

double World::reward_quality(int agent_id) const {
  double total = 0.0;
  for (size_t n = 0; n < ues_.size(); ++n) {
    if (ues_[n].served_by && *ues_[n].served_by == agent_id) total += ue_quality_[n];
  }
  return total;
}

double World::reward_common() const { return tau_ / (1.0 + omega_); }

double World::reward_total(int agent_id) const {
  return reward_energy(agent_id) * reward_quality(agent_id) * reward_common();
}

MetricsRecord World::current_metrics() const {
  MetricsRecord rec;
  rec.step = step_;
  rec.tau = tau_;
  rec.omega = omega_;
  rec.r_common = reward_common();
  rec.agents.resize(cfg_.m_agents);
  for (int m = 0; m < cfg_.m_agents; ++m) {
    AgentStepMetrics& a = rec.agents[m];
    a.r_e = reward_energy(m);
    a.r_u = reward_quality(m);
    a.r_total = reward_total(m);
    a.energy_j = uavs_[m].energy.q_joules;
    a.served = served_count_[m];
  }
  for (size_t i = 0; i < uavs_.size(); ++i) {
    const int c = served_count_[i];
    rec.served_total += c;
    if (uavs_[i].is_agent()) {
      rec.served_agents += c;
    } else {
      rec.served_nonagents += c;
    }
  }
  return rec;
}

StepOutcome World::step(const std::vector<Action>& actions) {
  if (done()) throw std::logic_error("step: episode already done");
  if (static_cast<int>(actions.size()) != cfg_.m_agents) {
    throw std::invalid_argument("step: one action per agent required");
  }
  for (int m = 0; m < cfg_.m_agents; ++m) apply_action(uavs_[m], actions[m]);
  move_ues();
  for (UavState& u : uavs_) {
    if (u.kind == UavKind::NonAgent && u.alive &&
        malf_rng_.bernoulli(cfg_.malfunction_prob)) {
      u.alive = false;
    }
  }
  ++step_;
  refresh_links();

  StepOutcome out;
  out.done = done();
  out.r_common = reward_common();
  out.rewards.resize(cfg_.m_agents);
  out.observations.resize(cfg_.m_agents);
  for (int m = 0; m < cfg_.m_agents; ++m) {
    out.rewards[m] = reward_total(m);
    out.observations[m] = observe(m);
  }
  out.metrics = current_metrics();
  return out;
}

int World::observation_dim(const WorldConfig& cfg) {
  return 4 + 6 * cfg.n_ues + 5 * (cfg.m_agents - 1) + 5 * cfg.k_nonagents;
}

std::vector<double> World::observe(int agent_id) const {
  const int dim = observation_dim(cfg_);
  std::vector<double> obs(dim, 0.0);
  const UavState& me = uavs_[agent_id];
  if (!me.alive) return obs;

  const double diag = std::sqrt(cfg_.grid_x_m * cfg_.grid_x_m +
                                cfg_.grid_y_m * cfg_.grid_y_m +
                                cfg_.grid_z_m * cfg_.grid_z_m);
  obs[0] = me.pos.x / cfg_.grid_x_m;
  obs[1] = me.pos.y / cfg_.grid_y_m;
  obs[2] = me.pos.z / cfg_.grid_z_m;
  obs[3] = me.energy.fraction();

  struct Entry {
    double dist;
    size_t index;
  };
  const auto visible = [&](double dist) { return cfg_.fomdp || dist <= cfg_.obs_radius_m; };
  const auto fill_sorted = [](std::vector<Entry>& es) {
    std::sort(es.begin(), es.end(), [](const Entry& a, const Entry& b) {
      return a.dist != b.dist ? a.dist < b.dist : a.index < b.index;
    });
  };

  size_t off = 4;
  std::vector<Entry> entries;
  entries.reserve(ues_.size());
  for (size_t n = 0; n < ues_.size(); ++n) {
    const double d = distance(me.pos, ues_[n].pos);
    if (visible(d)) entries.push_back({d, n});
  }
  fill_sorted(entries);
  for (const Entry& e : entries) {
    const UeState& ue = ues_[e.index];
    obs[off + 0] = 1.0;
    obs[off + 1] = (ue.pos.x - me.pos.x) / cfg_.grid_x_m;
    obs[off + 2] = (ue.pos.y - me.pos.y) / cfg_.grid_y_m;
    obs[off + 3] = (ue.pos.z - me.pos.z) / cfg_.grid_z_m;
    obs[off + 4] = e.dist / diag;
    obs[off + 5] = ue.served_by ? 1.0 : 0.0;
    off += 6;
  }
  off = 4 + 6 * static_cast<size_t>(cfg_.n_ues);

  const auto fill_uavs = [&](bool agents) {
    entries.clear();
    for (const UavState& u : uavs_) {
      if (u.id == agent_id || !u.alive) continue;
      if (u.is_agent() != agents) continue;
      const double d = distance(me.pos, u.pos);
      if (visible(d)) entries.push_back({d, static_cast<size_t>(u.id)});
    }
    fill_sorted(entries);
    for (const Entry& e : entries) {
      const UavState& u = uavs_[e.index];
      obs[off + 0] = 1.0;
      obs[off + 1] = (u.pos.x - me.pos.x) / cfg_.grid_x_m;
      obs[off + 2] = (u.pos.y - me.pos.y) / cfg_.grid_y_m;
      obs[off + 3] = (u.pos.z - me.pos.z) / cfg_.grid_z_m;
      obs[off + 4] = e.dist / diag;
      off += 5;
    }
  };
  fill_uavs(true);
  off = 4 + 6 * static_cast<size_t>(cfg_.n_ues) + 5 * static_cast<size_t>(cfg_.m_agents - 1);
  fill_uavs(false);
  return obs;
}

}  // namespace uavsim::world
