#pragma once

#include <cstdint>
#include <string>

#include "uavsim/marl.hpp"
#include "uavsim/world.hpp"

namespace uavsim::config {

enum class Mode { POMDP, FOMDP };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Full scenario: environment, radio, propulsion, training and run settings.
// Serialized as an INI file with sections [world], [radio], [energy],
// [train], [run]; every field has a key of the same name.
struct ScenarioConfig {
  world::WorldConfig world;
  world::RadioParams radio;
  std::string mcs_table_path;  // empty = embedded 802.11ad table
  world::EnergyParams energy;
  marl::TrainConfig train;
  marl::Method method = marl::Method::Proposed;
  Mode mode = Mode::POMDP;
  std::string output_dir = "runs/out";

  void validate() const;

  // "" or "paper": full-scale defaults; "desk": small world and a short
  // schedule that trains in minutes.
  static ScenarioConfig preset(const std::string& name);

  // Parses an INI file and overlays it onto *this. Unknown sections or
  // keys, or malformed values, throw std::invalid_argument.
  void load_overlay(const std::string& path);

  // Dotted access ("world.n_ues"). Throws std::invalid_argument on unknown
  // keys or bad values.
  void set(const std::string& dotted_key, const std::string& value);
  std::string get(const std::string& dotted_key) const;

  // Canonical serialization (fixed key order, 17-digit floats); reloading
  // it reproduces the config exactly.
  std::string to_ini() const;
  void write_ini(const std::string& path) const;

  uint64_t config_hash() const { return fnv1a64(to_ini()); }

  // Hash with the epoch target masked out: a run may be resumed (or
  // extended) under any epochs value, everything else must match.
  uint64_t resume_hash() const;

  // One master seed: assigns both world.seed and train.seed.
  void set_master_seed(uint64_t seed) {
    world.seed = seed;
    train.seed = seed;
  }

  // World config with the run mode folded in (FOMDP = nothing masked).
  world::WorldConfig effective_world() const {
    world::WorldConfig w = world;
    w.fomdp = world.fomdp || mode == Mode::FOMDP;
    return w;
  }
};

}  // namespace uavsim::config
