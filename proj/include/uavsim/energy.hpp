#pragma once

namespace uavsim::energy {

// Rotor-craft propulsion constants. Defaults match a small quad-rotor
// (1.375 kg class) with weight expressed in newtons.
struct UavPowerParams {
  double delta = 0.012;     // profile drag coefficient
  double rho = 1.225;       // air density, kg/m^3
  double s_solidity = 0.05; // rotor solidity
  double a_disc = 0.503;    // rotor disc area, m^2
  double omega = 300.0;     // blade angular velocity, rad/s
  double r_rotor = 0.4;     // rotor radius, m
  double k_induced = 0.1;   // induced-power correction factor
  double weight_n = 13.48;  // aircraft weight, N (1.375 kg * 9.8)
  double u_tip = 120.0;     // rotor tip speed, m/s
  double v0 = 4.03;         // mean rotor-induced velocity in hover, m/s
  double d0 = 0.6;          // fuselage drag ratio

  void validate() const;  // all fields must be > 0
};

enum class CruiseFormula {
  TipSpeedSquared,  // blade-profile term scales with (v/U_tip)^2
  AsPrinted,        // v^2/U_tip variant, kept selectable for comparison
};

// Remaining battery modeled as a non-negative backlog in joules.
struct EnergyQueue {
  double q_joules = 0.0;
  double q_init_joules = 0.0;

  static EnergyQueue full(double capacity_joules) {
    return {capacity_joules, capacity_joules};
  }
  double fraction() const {
    return q_init_joules > 0.0 ? q_joules / q_init_joules : 0.0;
  }
};

// 89.224 Wh flight battery (5870 mAh at 15.2 V), in joules.
constexpr double kDefaultBatteryJoules = 89.224 * 3600.0;

// Hover power: blade-profile term plus induced term.
double hover_power_w(const UavPowerParams& p);

// The blade-profile and induced components of hover power, exposed for
// term-level checks.
double hover_blade_profile_w(const UavPowerParams& p);
double hover_induced_w(const UavPowerParams& p);

// Level-flight power at speed v: blade profile + induced + parasite drag.
// Reduces exactly to hover_power_w at v = 0.
double cruise_power_w(double v_mps, const UavPowerParams& p,
                      CruiseFormula formula = CruiseFormula::TipSpeedSquared);

// One discharge step: q' = max(0, q - power*dt). Never negative, never
// increasing.
EnergyQueue queue_step(const EnergyQueue& q, double power_w, double dt_s);

}  // namespace uavsim::energy
