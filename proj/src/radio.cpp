#include "uavsim/radio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace uavsim::radio {

void LinkBudget::validate() const {
  if (g_tx_dbi + p_tx_dbm > eirp_cap_dbm) {
    throw std::invalid_argument("link budget: g_tx_dbi + p_tx_dbm exceeds the EIRP cap");
  }
  if (bandwidth_hz <= 0.0) throw std::invalid_argument("link budget: bandwidth_hz must be > 0");
  if (f_ghz <= 0.0) throw std::invalid_argument("link budget: f_ghz must be > 0");
  if (n_exp <= 0.0) throw std::invalid_argument("link budget: n_exp must be > 0");
}

void AntennaPattern::validate() const {
  if (phi3_deg <= 0.0 || theta3_deg <= 0.0) {
    throw std::invalid_argument("antenna pattern: beamwidths must be > 0");
  }
}

void McsTable::validate() const {
  if (rows.empty()) throw std::invalid_argument("MCS table: no rows");
  for (size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].sensitivity_dbm <= rows[i - 1].sensitivity_dbm) {
      throw std::invalid_argument("MCS table: sensitivities must be strictly increasing");
    }
    if (rows[i].rate_mbps <= rows[i - 1].rate_mbps) {
      throw std::invalid_argument("MCS table: rates must be strictly increasing");
    }
  }
}

McsTable McsTable::default_80211ad() {
  McsTable t;
  t.rows = {
      {-78.0, "MCS0", 27.5},    {-68.0, "MCS1", 385.0},
      {-66.0, "MCS2", 770.0},   {-65.0, "MCS3", 962.5},
      {-64.0, "MCS4", 1155.0},  {-63.0, "MCS6", 1540.0},
      {-62.0, "MCS7", 1925.0},  {-61.0, "MCS8", 2310.0},
      {-59.0, "MCS9", 2502.5},  {-55.0, "MCS10", 3080.0},
      {-54.0, "MCS11", 3850.0}, {-53.0, "MCS12", 4620.0},
  };
  return t;
}

McsTable McsTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("MCS table: cannot open " + path);
  McsTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    McsRow row;
    if (!(ss >> row.sensitivity_dbm >> row.mcs_id >> row.rate_mbps)) {
      throw std::runtime_error("MCS table: parse error at " + path + ":" +
                               std::to_string(lineno));
    }
    t.rows.push_back(std::move(row));
  }
  t.validate();
  return t;
}

double path_loss_db(double d_m, const LinkBudget& b) {
  if (d_m <= 0.0) throw std::domain_error("path loss: distance must be > 0");
  const double d = std::max(d_m, kMinDistanceM);
  return b.a_db + 20.0 * std::log10(b.f_ghz) + 10.0 * b.n_exp * std::log10(d);
}

double antenna_gain_dbi(double phi_deg, double theta_deg, const AntennaPattern& p) {
  const double phi = deg_to_rad(phi_deg);
  const double theta = deg_to_rad(theta_deg);
  // Total angular offset from boresight, in degrees.
  const double cos_off = std::clamp(std::cos(phi) * std::cos(theta), -1.0, 1.0);
  const double omega_off_deg = rad_to_deg(std::acos(cos_off));
  double delta = 0.0;
  if (omega_off_deg > 0.0) {
    // Direction of the offset in the azimuth/elevation plane; atan2 keeps
    // the phi==0 and theta==+-90 cases finite, and only squared
    // sin/cos of the result are used.
    const double psi = std::atan2(std::tan(theta), std::sin(phi));
    const double ca = std::cos(psi) / p.phi3_deg;
    const double sa = std::sin(psi) / p.theta3_deg;
    delta = omega_off_deg * std::sqrt(ca * ca + sa * sa);
  }
  if (delta < 1.0) return p.g_max_dbi - 12.0 * delta * delta;
  return p.g_max_dbi - 12.0 - 15.0 * std::log(delta);
}

double rx_power_dbm(double d_m, const LinkBudget& b) {
  return b.g_tx_dbi + b.p_tx_dbm - path_loss_db(d_m, b) + b.g_rx_dbi;
}

double noise_mw(const LinkBudget& b) {
  const double noise_dbm =
      b.noise_density_dbm_hz + 10.0 * std::log10(b.bandwidth_hz) + b.sys_loss_db;
  return dbm_to_mw(noise_dbm);
}

AngularOffset boresight_offset(const Vec3& boresight, const Vec3& dir) {
  const Vec3 f = boresight.normalized();
  // Reference "up": global z unless the beam itself is near-vertical.
  const Vec3 ref = std::abs(f.z) > 0.999 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 0.0, 1.0};
  const Vec3 right = f.cross(ref).normalized();
  const Vec3 up = right.cross(f);
  const Vec3 d = dir.normalized();
  const double fwd = d.dot(f);
  const double lat = d.dot(right);
  const double vert = std::clamp(d.dot(up), -1.0, 1.0);
  AngularOffset off;
  off.phi_deg = rad_to_deg(std::atan2(lat, fwd));
  off.theta_deg = rad_to_deg(std::asin(vert));
  return off;
}

double interference_mw(const LinkGeometry& victim,
                       std::span<const LinkGeometry> interferers,
                       const LinkBudget& b, const AntennaPattern& p) {
  double total = 0.0;
  for (const LinkGeometry& i : interferers) {
    const Vec3 to_victim = victim.rx_pos - i.tx_pos;
    const double d = to_victim.norm();
    if (d == 0.0) {
      throw std::domain_error("interference: interferer Tx co-located with victim Rx");
    }
    const AngularOffset off = boresight_offset(i.tx_boresight, to_victim);
    const double gain = antenna_gain_dbi(off.phi_deg, off.theta_deg, p);
    total += dbm_to_mw(gain + b.p_tx_dbm - path_loss_db(d, b));
  }
  return total;
}

double capacity_bps(double rx_mw, double interf_mw, double noise_mw,
                    double bandwidth_hz) {
  if (noise_mw <= 0.0) throw std::domain_error("capacity: noise must be > 0");
  if (rx_mw < 0.0 || interf_mw < 0.0 || bandwidth_hz < 0.0) {
    throw std::domain_error("capacity: negative input");
  }
  return bandwidth_hz * std::log2(1.0 + rx_mw / (noise_mw + interf_mw));
}

double mcs_rate_mbps(double rx_dbm, const McsTable& t) {
  double rate = 0.0;
  for (const McsRow& row : t.rows) {
    if (rx_dbm >= row.sensitivity_dbm) rate = row.rate_mbps;
  }
  return rate;
}

double quality(double rate_mbps, ServiceType s, const QualityParams& q) {
  if (s == ServiceType::VideoStreaming) {
    return 1.0 / (1.0 + std::exp(-q.v_a * (rate_mbps - q.w_a)));
  }
  return std::log(q.v_b * rate_mbps + q.w_b);
}

double coverage_radius_m(double uav_alt_m, double ue_alt_m, double beamwidth_deg,
                         CoverageFormula formula) {
  if (beamwidth_deg <= 0.0 || beamwidth_deg >= 180.0) {
    throw std::domain_error("coverage: beamwidth must be in (0, 180) degrees");
  }
  if (uav_alt_m <= ue_alt_m) return 0.0;
  const double tan_half = std::tan(deg_to_rad(beamwidth_deg / 2.0));
  const double height = uav_alt_m - ue_alt_m;
  if (formula == CoverageFormula::AsPrinted) return height / uav_alt_m * tan_half;
  return height * tan_half;
}

}  // namespace uavsim::radio
