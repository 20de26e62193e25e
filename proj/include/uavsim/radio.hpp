#pragma once

#include <span>
#include <string>
#include <vector>

#include "uavsim/geometry.hpp"

namespace uavsim::radio {

// 60 GHz link-budget constants (IEEE 802.11ad style deployment).
// All gains/powers in dB/dBm, bandwidth in Hz.
struct LinkBudget {
  double a_db = 32.5;               // antenna/beamforming coefficient of the path-loss model
  double f_ghz = 60.0;              // carrier frequency
  double n_exp = 2.0;               // path-loss exponent
  double bandwidth_hz = 2.16e9;     // 802.11ad channel bandwidth
  double g_tx_dbi = 19.0;           // transmit antenna gain
  double p_tx_dbm = 24.0;           // transmit power
  double g_rx_dbi = 3.0;            // receive antenna gain
  double eirp_cap_dbm = 43.0;       // regulatory EIRP limit at 60 GHz (US)
  double noise_density_dbm_hz = -174.0;
  double sys_loss_db = 15.0;        // implementation loss (10) + noise figure (5)

  // Throws std::invalid_argument on a violated constraint, in particular
  // g_tx_dbi + p_tx_dbm > eirp_cap_dbm.
  void validate() const;
};

// ITU Gaussian reference pattern for a directional 60 GHz antenna.
// Half-power beamwidths in degrees.
struct AntennaPattern {
  double g_max_dbi = 19.0;
  double phi3_deg = 10.0;
  double theta3_deg = 10.0;

  void validate() const;
};

// One row of the 802.11ad MCS table: minimum Rx power for the mode and the
// data rate it sustains.
struct McsRow {
  double sensitivity_dbm;
  std::string mcs_id;
  double rate_mbps;
};

// Rows ascending in both sensitivity and rate.
struct McsTable {
  std::vector<McsRow> rows;

  void validate() const;

  // The 12-row 802.11ad single-carrier table (MCS0..MCS12, -78..-53 dBm).
  static McsTable default_80211ad();

  // Plain-text table, one row per line: sensitivity_dbm mcs_id rate_mbps.
  // Lines starting with '#' are ignored. Throws std::runtime_error on
  // parse failure; the result is validated.
  static McsTable load(const std::string& path);
};

enum class ServiceType { VideoStreaming, OnlineGaming, WebSurfing, VoIP };

constexpr int kNumServiceTypes = 4;

// A directional transmission: the Tx beam points at the link's own
// receiver, so tx_boresight is the unit vector Tx -> served Rx.
struct LinkGeometry {
  Vec3 tx_pos;
  Vec3 rx_pos;
  Vec3 tx_boresight;
};

// Quality-function weights: sigmoid for video traffic, log for the rest.
struct QualityParams {
  double v_a = 0.01;
  double w_a = 1024.0;  // Mbps at the sigmoid midpoint
  double v_b = 1.0;
  double w_b = 1.0;
};

enum class CoverageFormula {
  Cone,       // footprint radius of the beam cone at the UE's altitude
  AsPrinted,  // height ratio variant, kept selectable for comparison
};

// Distances below this are clamped before the path-loss log.
constexpr double kMinDistanceM = 1.0;

constexpr double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
constexpr double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Log-distance path loss at 60 GHz: a_db + 20*log10(f_ghz) + 10*n*log10(d).
// d_m <= 0 throws std::domain_error; d_m < 1 m is clamped to 1 m.
double path_loss_db(double d_m, const LinkBudget& b);

// Gain at an angular offset (phi azimuth, theta elevation, degrees) from
// boresight. Quadratic roll-off out to the beam edge, logarithmic beyond;
// the two branches meet at g_max - 12.
double antenna_gain_dbi(double phi_deg, double theta_deg, const AntennaPattern& p);

// Boresight-aligned received power: EIRP - path loss + Rx gain.
double rx_power_dbm(double d_m, const LinkBudget& b);

// Thermal noise over the channel bandwidth plus system losses, in mW.
double noise_mw(const LinkBudget& b);

// Sum of off-boresight leakage from every interfering transmitter into the
// victim's receiver, in mW. Throws std::domain_error if an interferer's Tx
// sits exactly on the victim's Rx.
double interference_mw(const LinkGeometry& victim,
                       std::span<const LinkGeometry> interferers,
                       const LinkBudget& b, const AntennaPattern& p);

// Shannon capacity W*log2(1 + rx/(noise+interf)) in bit/s.
// noise_mw <= 0 or a negative input throws std::domain_error.
double capacity_bps(double rx_mw, double interf_mw, double noise_mw,
                    double bandwidth_hz);

// Rate of the fastest MCS whose sensitivity the Rx power meets; 0 below the
// bottom row.
double mcs_rate_mbps(double rx_dbm, const McsTable& t);

// Service quality at a given data rate. Video: sigmoid centred at w_a Mbps;
// everything else: ln(v_b*rate + w_b).
double quality(double rate_mbps, ServiceType s, const QualityParams& q = {});

// Ground-footprint radius of a downward beam of the given full beamwidth.
// Zero when the UE is at or above the UAV.
double coverage_radius_m(double uav_alt_m, double ue_alt_m, double beamwidth_deg,
                         CoverageFormula formula = CoverageFormula::Cone);

// Azimuth/elevation (degrees) of direction `dir` in the local frame of a
// transmitter whose beam points along `boresight`. Azimuth in (-180, 180],
// elevation in [-90, 90].
struct AngularOffset {
  double phi_deg;
  double theta_deg;
};
AngularOffset boresight_offset(const Vec3& boresight, const Vec3& dir);

}  // namespace uavsim::radio
