#include "uavsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace uavsim::config {

std::string to_string(Mode m) { return m == Mode::POMDP ? "POMDP" : "FOMDP"; }

Mode mode_from_string(const std::string& s) {
  std::string k;
  for (char c : s) k += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (k == "POMDP") return Mode::POMDP;
  if (k == "FOMDP") return Mode::FOMDP;
  throw std::invalid_argument("unknown mode: " + s);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

std::string fmt_int(long long v) { return std::to_string(v); }
std::string fmt_u64(uint64_t v) { return std::to_string(v); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

double parse_double(const std::string& v) {
  size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return d;
}

long long parse_int(const std::string& v) {
  size_t pos = 0;
  const long long i = std::stoll(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return i;
}

uint64_t parse_u64(const std::string& v) {
  size_t pos = 0;
  const unsigned long long i = std::stoull(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("trailing characters");
  return i;
}

bool parse_bool(const std::string& v) {
  std::string k;
  for (char c : v) k += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (k == "true" || k == "1" || k == "yes") return true;
  if (k == "false" || k == "0" || k == "no") return false;
  throw std::invalid_argument("not a boolean");
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += fmt_double(v[i]);
  }
  return out;
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) throw std::invalid_argument("empty list element");
    out.push_back(parse_double(item));
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::string to_string(world::OverlapFormula f) {
  return f == world::OverlapFormula::MultiCovered ? "multi-covered" : "as-printed";
}
world::OverlapFormula overlap_from_string(const std::string& s) {
  if (s == "multi-covered") return world::OverlapFormula::MultiCovered;
  if (s == "as-printed") return world::OverlapFormula::AsPrinted;
  throw std::invalid_argument("unknown overlap_formula: " + s);
}

std::string to_string(world::EnergyRewardMode m) {
  return m == world::EnergyRewardMode::Normalized ? "normalized" : "raw-joules";
}
world::EnergyRewardMode energy_reward_from_string(const std::string& s) {
  if (s == "normalized") return world::EnergyRewardMode::Normalized;
  if (s == "raw-joules") return world::EnergyRewardMode::RawJoules;
  throw std::invalid_argument("unknown energy_reward_mode: " + s);
}

std::string to_string(radio::CoverageFormula f) {
  return f == radio::CoverageFormula::Cone ? "cone" : "as-printed";
}
radio::CoverageFormula coverage_from_string(const std::string& s) {
  if (s == "cone") return radio::CoverageFormula::Cone;
  if (s == "as-printed") return radio::CoverageFormula::AsPrinted;
  throw std::invalid_argument("unknown coverage_formula: " + s);
}

std::string to_string(energy::CruiseFormula f) {
  return f == energy::CruiseFormula::TipSpeedSquared ? "utip-squared" : "as-printed";
}
energy::CruiseFormula cruise_from_string(const std::string& s) {
  if (s == "utip-squared") return energy::CruiseFormula::TipSpeedSquared;
  if (s == "as-printed") return energy::CruiseFormula::AsPrinted;
  throw std::invalid_argument("unknown cruise_formula: " + s);
}

using Getter = std::string (*)(const ScenarioConfig&);
using Setter = void (*)(ScenarioConfig&, const std::string&);

struct KeyDef {
  const char* section;
  const char* key;
  Getter get;
  Setter set;
};

#define UVS_KEY(sec, name, getter, setter)                                  \
  {sec, name, +[](const ScenarioConfig& c) -> std::string { return getter; }, \
   +[](ScenarioConfig& c, const std::string& v) { setter; }}

const std::vector<KeyDef>& key_table() {
  static const std::vector<KeyDef> table = {
      // [world]
      UVS_KEY("world", "n_ues", fmt_int(c.world.n_ues),
              c.world.n_ues = static_cast<int>(parse_int(v))),
      UVS_KEY("world", "m_agents", fmt_int(c.world.m_agents),
              c.world.m_agents = static_cast<int>(parse_int(v))),
      UVS_KEY("world", "k_nonagents", fmt_int(c.world.k_nonagents),
              c.world.k_nonagents = static_cast<int>(parse_int(v))),
      UVS_KEY("world", "grid_x_m", fmt_double(c.world.grid_x_m),
              c.world.grid_x_m = parse_double(v)),
      UVS_KEY("world", "grid_y_m", fmt_double(c.world.grid_y_m),
              c.world.grid_y_m = parse_double(v)),
      UVS_KEY("world", "grid_z_m", fmt_double(c.world.grid_z_m),
              c.world.grid_z_m = parse_double(v)),
      UVS_KEY("world", "altitude_levels_m", fmt_list(c.world.altitude_levels_m),
              c.world.altitude_levels_m = parse_list(v)),
      UVS_KEY("world", "beamwidth_deg", fmt_double(c.world.beamwidth_deg),
              c.world.beamwidth_deg = parse_double(v)),
      UVS_KEY("world", "step_dt_s", fmt_double(c.world.step_dt_s),
              c.world.step_dt_s = parse_double(v)),
      UVS_KEY("world", "episode_steps", fmt_int(c.world.episode_steps),
              c.world.episode_steps = static_cast<int>(parse_int(v))),
      UVS_KEY("world", "uav_speed_mps", fmt_double(c.world.uav_speed_mps),
              c.world.uav_speed_mps = parse_double(v)),
      UVS_KEY("world", "malfunction_prob", fmt_double(c.world.malfunction_prob),
              c.world.malfunction_prob = parse_double(v)),
      UVS_KEY("world", "obs_radius_m", fmt_double(c.world.obs_radius_m),
              c.world.obs_radius_m = parse_double(v)),
      UVS_KEY("world", "fomdp", fmt_bool(c.world.fomdp), c.world.fomdp = parse_bool(v)),
      UVS_KEY("world", "seed", fmt_u64(c.world.seed), c.world.seed = parse_u64(v)),
      UVS_KEY("world", "ue_max_speed_mps", fmt_double(c.world.ue_max_speed_mps),
              c.world.ue_max_speed_mps = parse_double(v)),
      UVS_KEY("world", "ue_place_mean_m", fmt_double(c.world.ue_place_mean_m),
              c.world.ue_place_mean_m = parse_double(v)),
      UVS_KEY("world", "ue_alt_mean_m", fmt_double(c.world.ue_alt_mean_m),
              c.world.ue_alt_mean_m = parse_double(v)),
      UVS_KEY("world", "nonagent_ring_m", fmt_double(c.world.nonagent_ring_m),
              c.world.nonagent_ring_m = parse_double(v)),
      UVS_KEY("world", "nonagent_alt_m", fmt_double(c.world.nonagent_alt_m),
              c.world.nonagent_alt_m = parse_double(v)),
      UVS_KEY("world", "overlap_samples", fmt_int(c.world.overlap_samples),
              c.world.overlap_samples = static_cast<int>(parse_int(v))),
      UVS_KEY("world", "overlap_formula", to_string(c.world.overlap_formula),
              c.world.overlap_formula = overlap_from_string(v)),
      UVS_KEY("world", "energy_reward_mode", to_string(c.world.energy_reward_mode),
              c.world.energy_reward_mode = energy_reward_from_string(v)),
      UVS_KEY("world", "battery_joules", fmt_double(c.world.battery_joules),
              c.world.battery_joules = parse_double(v)),
      UVS_KEY("world", "service_weights", fmt_list(c.world.service_weights),
              c.world.service_weights = parse_list(v)),
      // [radio]
      UVS_KEY("radio", "a_db", fmt_double(c.radio.budget.a_db),
              c.radio.budget.a_db = parse_double(v)),
      UVS_KEY("radio", "f_ghz", fmt_double(c.radio.budget.f_ghz),
              c.radio.budget.f_ghz = parse_double(v)),
      UVS_KEY("radio", "n_exp", fmt_double(c.radio.budget.n_exp),
              c.radio.budget.n_exp = parse_double(v)),
      UVS_KEY("radio", "bandwidth_hz", fmt_double(c.radio.budget.bandwidth_hz),
              c.radio.budget.bandwidth_hz = parse_double(v)),
      UVS_KEY("radio", "g_tx_dbi", fmt_double(c.radio.budget.g_tx_dbi),
              c.radio.budget.g_tx_dbi = parse_double(v)),
      UVS_KEY("radio", "p_tx_dbm", fmt_double(c.radio.budget.p_tx_dbm),
              c.radio.budget.p_tx_dbm = parse_double(v)),
      UVS_KEY("radio", "g_rx_dbi", fmt_double(c.radio.budget.g_rx_dbi),
              c.radio.budget.g_rx_dbi = parse_double(v)),
      UVS_KEY("radio", "eirp_cap_dbm", fmt_double(c.radio.budget.eirp_cap_dbm),
              c.radio.budget.eirp_cap_dbm = parse_double(v)),
      UVS_KEY("radio", "noise_density_dbm_hz", fmt_double(c.radio.budget.noise_density_dbm_hz),
              c.radio.budget.noise_density_dbm_hz = parse_double(v)),
      UVS_KEY("radio", "sys_loss_db", fmt_double(c.radio.budget.sys_loss_db),
              c.radio.budget.sys_loss_db = parse_double(v)),
      UVS_KEY("radio", "g_max_dbi", fmt_double(c.radio.pattern.g_max_dbi),
              c.radio.pattern.g_max_dbi = parse_double(v)),
      UVS_KEY("radio", "phi3_deg", fmt_double(c.radio.pattern.phi3_deg),
              c.radio.pattern.phi3_deg = parse_double(v)),
      UVS_KEY("radio", "theta3_deg", fmt_double(c.radio.pattern.theta3_deg),
              c.radio.pattern.theta3_deg = parse_double(v)),
      UVS_KEY("radio", "coverage_formula", to_string(c.radio.coverage_formula),
              c.radio.coverage_formula = coverage_from_string(v)),
      UVS_KEY("radio", "quality_v_a", fmt_double(c.radio.quality.v_a),
              c.radio.quality.v_a = parse_double(v)),
      UVS_KEY("radio", "quality_w_a", fmt_double(c.radio.quality.w_a),
              c.radio.quality.w_a = parse_double(v)),
      UVS_KEY("radio", "quality_v_b", fmt_double(c.radio.quality.v_b),
              c.radio.quality.v_b = parse_double(v)),
      UVS_KEY("radio", "quality_w_b", fmt_double(c.radio.quality.w_b),
              c.radio.quality.w_b = parse_double(v)),
      UVS_KEY("radio", "mcs_table", c.mcs_table_path, {
        c.mcs_table_path = v;
        c.radio.mcs = v.empty() ? radio::McsTable::default_80211ad()
                                : radio::McsTable::load(v);
      }),
      // [energy]
      UVS_KEY("energy", "delta", fmt_double(c.energy.power.delta),
              c.energy.power.delta = parse_double(v)),
      UVS_KEY("energy", "rho", fmt_double(c.energy.power.rho),
              c.energy.power.rho = parse_double(v)),
      UVS_KEY("energy", "s_solidity", fmt_double(c.energy.power.s_solidity),
              c.energy.power.s_solidity = parse_double(v)),
      UVS_KEY("energy", "a_disc", fmt_double(c.energy.power.a_disc),
              c.energy.power.a_disc = parse_double(v)),
      UVS_KEY("energy", "omega", fmt_double(c.energy.power.omega),
              c.energy.power.omega = parse_double(v)),
      UVS_KEY("energy", "r_rotor", fmt_double(c.energy.power.r_rotor),
              c.energy.power.r_rotor = parse_double(v)),
      UVS_KEY("energy", "k_induced", fmt_double(c.energy.power.k_induced),
              c.energy.power.k_induced = parse_double(v)),
      UVS_KEY("energy", "weight_n", fmt_double(c.energy.power.weight_n),
              c.energy.power.weight_n = parse_double(v)),
      UVS_KEY("energy", "u_tip", fmt_double(c.energy.power.u_tip),
              c.energy.power.u_tip = parse_double(v)),
      UVS_KEY("energy", "v0", fmt_double(c.energy.power.v0),
              c.energy.power.v0 = parse_double(v)),
      UVS_KEY("energy", "d0", fmt_double(c.energy.power.d0),
              c.energy.power.d0 = parse_double(v)),
      UVS_KEY("energy", "cruise_formula", to_string(c.energy.cruise_formula),
              c.energy.cruise_formula = cruise_from_string(v)),
      // [train]
      UVS_KEY("train", "gamma", fmt_double(c.train.gamma), c.train.gamma = parse_double(v)),
      UVS_KEY("train", "lr", fmt_double(c.train.lr), c.train.lr = parse_double(v)),
      UVS_KEY("train", "batch_size", fmt_int(c.train.batch_size),
              c.train.batch_size = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "buffer_capacity", fmt_int(c.train.buffer_capacity),
              c.train.buffer_capacity = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "warmup", fmt_int(c.train.warmup),
              c.train.warmup = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "eps_start", fmt_double(c.train.eps_start),
              c.train.eps_start = parse_double(v)),
      UVS_KEY("train", "eps_end", fmt_double(c.train.eps_end),
              c.train.eps_end = parse_double(v)),
      UVS_KEY("train", "eps_decay_frac", fmt_double(c.train.eps_decay_frac),
              c.train.eps_decay_frac = parse_double(v)),
      UVS_KEY("train", "entropy_coef", fmt_double(c.train.entropy_coef),
              c.train.entropy_coef = parse_double(v)),
      UVS_KEY("train", "target_update_cycle", fmt_int(c.train.target_update_cycle),
              c.train.target_update_cycle = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "epochs", fmt_int(c.train.epochs),
              c.train.epochs = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "seed", fmt_u64(c.train.seed), c.train.seed = parse_u64(v)),
      UVS_KEY("train", "hidden", fmt_int(c.train.hidden),
              c.train.hidden = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "dense_layers", fmt_int(c.train.dense_layers),
              c.train.dense_layers = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "train_every", fmt_int(c.train.train_every),
              c.train.train_every = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "comm_mean", marl::to_string(c.train.comm_mean),
              c.train.comm_mean = marl::comm_mean_from_string(v)),
      UVS_KEY("train", "share_followers", fmt_bool(c.train.share_followers),
              c.train.share_followers = parse_bool(v)),
      UVS_KEY("train", "per_agent_critic", fmt_bool(c.train.per_agent_critic),
              c.train.per_agent_critic = parse_bool(v)),
      UVS_KEY("train", "eval_episodes", fmt_int(c.train.eval_episodes),
              c.train.eval_episodes = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "checkpoint_every", fmt_int(c.train.checkpoint_every),
              c.train.checkpoint_every = static_cast<int>(parse_int(v))),
      UVS_KEY("train", "step_records", fmt_bool(c.train.step_records),
              c.train.step_records = parse_bool(v)),
      // [run]
      UVS_KEY("run", "method", marl::to_string(c.method),
              c.method = marl::method_from_string(v)),
      UVS_KEY("run", "mode", to_string(c.mode), c.mode = mode_from_string(v)),
      UVS_KEY("run", "output_dir", c.output_dir, c.output_dir = v),
      UVS_KEY("run", "seed", fmt_u64(c.world.seed), c.set_master_seed(parse_u64(v))),
  };
  return table;
}

#undef UVS_KEY

const KeyDef* find_key(const std::string& section, const std::string& key) {
  for (const KeyDef& k : key_table()) {
    if (section == k.section && key == k.key) return &k;
  }
  return nullptr;
}

}  // namespace

void ScenarioConfig::validate() const {
  world.validate();
  radio.validate();
  energy.power.validate();
  train.validate();
}

ScenarioConfig ScenarioConfig::preset(const std::string& name) {
  ScenarioConfig c;  // defaults are the full-scale setup
  if (name.empty() || name == "paper") return c;
  if (name == "desk") {
    // Same physics, desk-sized geometry: a grid the UAVs can actually
    // cross, altitude levels inside the modulation range, slower strides
    // and ground-level users. Trains to a useful policy in minutes.
    c.world.n_ues = 8;
    c.world.m_agents = 2;
    c.world.k_nonagents = 1;
    c.world.grid_x_m = 3000.0;
    c.world.grid_y_m = 3000.0;
    c.world.grid_z_m = 650.0;
    c.world.altitude_levels_m = {350.0, 500.0, 650.0};
    c.world.uav_speed_mps = 5.0;
    c.world.ue_place_mean_m = 800.0;
    c.world.ue_alt_mean_m = 120.0;
    c.world.nonagent_ring_m = 1000.0;
    c.world.nonagent_alt_m = 500.0;
    c.world.obs_radius_m = 1500.0;
    c.train.epochs = 3000;
    c.train.train_every = 4;
    return c;
  }
  throw std::invalid_argument("unknown preset: " + name);
}

void ScenarioConfig::set(const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw std::invalid_argument("config: key must be section.name: " + dotted_key);
  }
  const std::string section = dotted_key.substr(0, dot);
  const std::string key = dotted_key.substr(dot + 1);
  const KeyDef* def = find_key(section, key);
  if (def == nullptr) throw std::invalid_argument("config: unknown key " + dotted_key);
  try {
    def->set(*this, trim(value));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config: bad value for " + dotted_key + ": " + e.what());
  } catch (const std::out_of_range&) {
    throw std::invalid_argument("config: value out of range for " + dotted_key);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument("config: " + dotted_key + ": " + e.what());
  }
}

std::string ScenarioConfig::get(const std::string& dotted_key) const {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos) {
    throw std::invalid_argument("config: key must be section.name: " + dotted_key);
  }
  const KeyDef* def = find_key(dotted_key.substr(0, dot), dotted_key.substr(dot + 1));
  if (def == nullptr) throw std::invalid_argument("config: unknown key " + dotted_key);
  return def->get(*this);
}

void ScenarioConfig::load_overlay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw std::invalid_argument("config: bad section at " + path + ":" +
                                    std::to_string(lineno));
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || section.empty()) {
      throw std::invalid_argument("config: expected key = value at " + path + ":" +
                                  std::to_string(lineno));
    }
    set(section + "." + trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
}

std::string ScenarioConfig::to_ini() const {
  std::string out = "# uavsim-config-v1\n";
  std::string section;
  for (const KeyDef& k : key_table()) {
    if (section != k.section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    out += std::string(k.key) + " = " + k.get(*this) + "\n";
  }
  return out;
}

uint64_t ScenarioConfig::resume_hash() const {
  std::istringstream in(to_ini());
  std::string line, filtered;
  bool in_train = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.front() == '[') in_train = line == "[train]";
    if (in_train && line.rfind("epochs ", 0) == 0) continue;
    filtered += line;
    filtered += '\n';
  }
  return fnv1a64(filtered);
}

void ScenarioConfig::write_ini(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("config: cannot write " + path);
  out << to_ini();
}

}  // namespace uavsim::config
