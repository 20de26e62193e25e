#include "uavsim/energy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uavsim::energy {

void UavPowerParams::validate() const {
  const double fields[] = {delta, rho,      s_solidity, a_disc, omega, r_rotor,
                           k_induced, weight_n, u_tip,      v0,     d0};
  for (double f : fields) {
    if (f <= 0.0) throw std::invalid_argument("power params: all fields must be > 0");
  }
}

double hover_blade_profile_w(const UavPowerParams& p) {
  return p.delta / 8.0 * p.rho * p.s_solidity * p.a_disc *
         std::pow(p.omega, 3) * std::pow(p.r_rotor, 3);
}

double hover_induced_w(const UavPowerParams& p) {
  return (1.0 + p.k_induced) * std::pow(p.weight_n, 1.5) /
         std::sqrt(2.0 * p.rho * p.a_disc);
}

double hover_power_w(const UavPowerParams& p) {
  return hover_blade_profile_w(p) + hover_induced_w(p);
}

double cruise_power_w(double v_mps, const UavPowerParams& p, CruiseFormula formula) {
  if (v_mps < 0.0) throw std::domain_error("cruise power: speed must be >= 0");
  const double v2 = v_mps * v_mps;
  const double p_o = hover_blade_profile_w(p);
  const double p_i = hover_induced_w(p);
  const double tip_denom =
      formula == CruiseFormula::AsPrinted ? p.u_tip : p.u_tip * p.u_tip;
  const double blade = p_o * (1.0 + 3.0 * v2 / tip_denom);
  const double v0_2 = p.v0 * p.v0;
  const double induced_factor =
      std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)) - v2 / (2.0 * v0_2));
  const double induced = p_i * induced_factor;
  const double parasite = 0.5 * p.d0 * p.rho * p.s_solidity * p.a_disc * v2 * v_mps;
  return blade + induced + parasite;
}

EnergyQueue queue_step(const EnergyQueue& q, double power_w, double dt_s) {
  if (power_w < 0.0) throw std::domain_error("queue step: power must be >= 0");
  if (dt_s <= 0.0) throw std::domain_error("queue step: dt must be > 0");
  EnergyQueue out = q;
  out.q_joules = std::max(0.0, q.q_joules - power_w * dt_s);
  return out;
}

}  // namespace uavsim::energy
