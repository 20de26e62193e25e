#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uavsim/energy.hpp"
#include "uavsim/geometry.hpp"
#include "uavsim/radio.hpp"
#include "uavsim/rng.hpp"

namespace uavsim::world {

// The seven discrete moves: hold position, one grid step in +-x / +-y, or
// snap to the adjacent altitude level.
enum class Action { Hover = 0, XPlus, XMinus, YPlus, YMinus, ZUp, ZDown };
constexpr int kNumActions = 7;

enum class UavKind { LeaderAgent, Agent, NonAgent };

enum class OverlapFormula {
  MultiCovered,  // area covered by >=2 live UAVs over the union area
  AsPrinted,     // 1 - (area covered by every live UAV) / union, selectable
};

enum class EnergyRewardMode { Normalized, RawJoules };

struct UeState {
  Vec3 pos;
  radio::ServiceType service = radio::ServiceType::WebSurfing;
  Vec3 velocity;
  std::optional<int> served_by;
};

struct UavState {
  int id = 0;
  UavKind kind = UavKind::Agent;
  Vec3 pos;
  energy::EnergyQueue energy;
  bool alive = true;

  bool is_agent() const { return kind != UavKind::NonAgent; }
};

struct WorldConfig {
  int n_ues = 25;
  int m_agents = 4;      // leader + (m_agents - 1) followers
  int k_nonagents = 3;   // fixed relays that only serve and may fail
  double grid_x_m = 6000.0;
  double grid_y_m = 6000.0;
  double grid_z_m = 2500.0;
  std::vector<double> altitude_levels_m = {1500.0, 2000.0, 2500.0};
  double beamwidth_deg = 80.0;
  double step_dt_s = 45.0;
  int episode_steps = 40;
  double uav_speed_mps = 20.0;
  double malfunction_prob = 0.03;
  double obs_radius_m = 3000.0;
  bool fomdp = false;
  uint64_t seed = 1;
  double ue_max_speed_mps = 3000.0 / 3600.0;  // 3 km/h
  double ue_place_mean_m = 1500.0;            // x/y exponential mean
  double ue_alt_mean_m = 1500.0;              // z exponential mean
  double nonagent_ring_m = 3000.0;
  double nonagent_alt_m = 2000.0;
  int overlap_samples = 10000;
  OverlapFormula overlap_formula = OverlapFormula::MultiCovered;
  EnergyRewardMode energy_reward_mode = EnergyRewardMode::Normalized;
  double battery_joules = energy::kDefaultBatteryJoules;
  std::vector<double> service_weights = {1.0, 1.0, 1.0, 1.0};

  void validate() const;  // throws std::invalid_argument
};

struct RadioParams {
  radio::LinkBudget budget;
  radio::AntennaPattern pattern;
  radio::McsTable mcs = radio::McsTable::default_80211ad();
  radio::QualityParams quality;
  radio::CoverageFormula coverage_formula = radio::CoverageFormula::Cone;

  void validate() const;
};

struct EnergyParams {
  energy::UavPowerParams power;
  energy::CruiseFormula cruise_formula = energy::CruiseFormula::TipSpeedSquared;
};

struct AgentStepMetrics {
  double r_e = 0.0;
  double r_u = 0.0;
  double r_total = 0.0;
  double energy_j = 0.0;
  int served = 0;
};

struct MetricsRecord {
  int step = 0;
  double tau = 0.0;
  double omega = 0.0;
  double r_common = 0.0;
  std::vector<AgentStepMetrics> agents;
  int served_total = 0;
  int served_agents = 0;
  int served_nonagents = 0;
};

struct StepOutcome {
  std::vector<double> rewards;  // r_total per agent
  double r_common = 0.0;
  std::vector<std::vector<double>> observations;  // per agent
  bool done = false;
  MetricsRecord metrics;
};

// Per-agent observation layout (fixed width, presence-masked):
//   [0..2] own position / grid dims, [3] residual energy fraction,
//   then n_ues slots   of {present, dx, dy, dz, dist, served},
//   then m-1  slots    of {present, dx, dy, dz, dist}   (other agents),
//   then k    slots    of {present, dx, dy, dz, dist}   (non-agents),
// slots sorted by distance, out-of-range or dead entities zeroed.
// FOMDP mode masks nothing.
class World {
 public:
  World(WorldConfig cfg, RadioParams radio_params, EnergyParams energy_params);

  // Rebuilds the episode: agents stacked at the grid centre on the middle
  // altitude level, non-agents evenly spaced on the ring, UEs drawn from
  // the per-axis exponential. Deterministic for a given (seed, episode).
  void reset(uint64_t episode_index = 0);

  // Applies agent actions, drifts UEs, rolls non-agent malfunctions,
  // re-associates and scores. Throws std::logic_error once done.
  StepOutcome step(const std::vector<Action>& actions);

  std::vector<double> observe(int agent_id) const;
  int observation_dim() const { return observation_dim(cfg_); }
  static int observation_dim(const WorldConfig& cfg);

  double support_rate() const;
  double overlap_degree() const;
  double reward_energy(int agent_id) const;
  double reward_quality(int agent_id) const;
  double reward_common() const;
  double reward_total(int agent_id) const;
  MetricsRecord current_metrics() const;

  // MCS-and-interference-limited rate of the link serving UE n; 0 when
  // unserved.
  double ue_rate_mbps(int ue_index) const { return ue_rate_mbps_[ue_index]; }

  const std::vector<UavState>& uavs() const { return uavs_; }
  const std::vector<UeState>& ues() const { return ues_; }
  int leader_id() const { return cfg_.m_agents - 1; }
  int step_index() const { return step_; }
  bool done() const { return step_ >= cfg_.episode_steps; }
  const WorldConfig& config() const { return cfg_; }
  double hover_power_w() const { return hover_w_; }
  double cruise_power_w() const { return cruise_w_; }

  // Mutable state access plus explicit re-association, for tests that
  // stage specific geometries.
  std::vector<UavState>& uavs_mut() { return uavs_; }
  std::vector<UeState>& ues_mut() { return ues_; }
  void refresh_links();

  // Returns false (no-op) for dead or non-agent UAVs.
  bool apply_action(UavState& u, Action a) const;

 private:
  void place_ues();
  void move_ues();
  double clamp_axis(double v, double hi) const;

  WorldConfig cfg_;
  RadioParams radio_;
  EnergyParams energy_;
  double hover_w_ = 0.0;
  double cruise_w_ = 0.0;
  double noise_mw_ = 0.0;

  std::vector<UavState> uavs_;  // agents first (leader last among them), then non-agents
  std::vector<UeState> ues_;
  int step_ = 0;
  Rng world_rng_{0};
  Rng malf_rng_{0};

  // Link state recomputed by refresh_links().
  std::vector<double> ue_rate_mbps_;
  std::vector<double> ue_quality_;
  std::vector<int> served_count_;  // per UAV
  double tau_ = 0.0;
  double omega_ = 0.0;
};

}  // namespace uavsim::world
