#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include "snspd/types.hpp"

namespace snspd {

/// Mutable per-channel state while a simulation run is in flight. Owned by
/// exactly one channel walker; never shared.
struct DetectorState {
  std::optional<double> last_fire_time = {};  // s, empty before the first detection
  bool latched = false;
  double effective_bias = 0.0;  // last evaluated value, normalized
};

/// Probability that a photon reaching an armed detector fires it: a logistic
/// rise in bias saturating at eta_internal. Monotone non-decreasing in i.
inline double detection_probability(const DetectorModel& m, double i) {
  return m.eta_internal / (1.0 + std::exp(-(i - m.i_mid) / m.i_width));
}

/// Dark count rate (events/s): exponential in bias, anchored so that
/// dark_rate(1) == dcr_amp.
inline double dark_rate(const DetectorModel& m, double i) {
  return m.dcr_amp * std::exp(m.dcr_slope * (i - 1.0));
}

/// Efficiency recovery after a detection: zero inside the hard dead time,
/// then a logistic approach to 1 that passes 0.5 exactly at t_half.
/// Multiplies detection_probability.
inline double recovery_factor(const DetectorModel& m, double dt) {
  if (dt < m.t_dead) return 0.0;
  return 1.0 / (1.0 + std::exp(-(dt - m.t_half) / m.tau_recovery));
}

/// Bias actually seen by the nanowire. An L-R path to ground pins it to the
/// applied value; an AC-coupled readout charges its coupling capacitor under
/// sustained counting and drives extra current.
inline double effective_bias(const ReadoutModel& r, double i_set, double recent_rate) {
  if (r.coupling == Coupling::LrPathToGround) return i_set;
  return i_set * (1.0 + r.overbias_coeff * recent_rate * r.tau_rc);
}

/// True once the effective bias reaches the latching threshold. Latching is
/// permanent within a run: callers must keep the state latched.
inline bool latch_check(const DetectorModel& m, double i_eff) { return i_eff >= m.i_latch; }

/// Per-event rms timing error of the full detector + amplifier chain at bias
/// i. The electrical terms scale as 1/i (lower slew at lower signal).
inline double jitter_sigma(const DetectorModel& m, const ReadoutModel& r, double i) {
  if (i <= 0.0) throw std::invalid_argument("jitter_sigma: bias must be > 0 (undefined slew)");
  const double det = m.jitter_coeff / i;
  const double ele = r.sigma_electrical_at_unit_bias / i;
  return std::sqrt(m.sigma_intrinsic * m.sigma_intrinsic + det * det + ele * ele);
}

inline constexpr double kFwhmPerSigma = 2.354820045030949;  // 2*sqrt(2*ln 2)

inline double fwhm_from_sigma(double sigma) { return kFwhmPerSigma * sigma; }

/// Exponential moving average of the detection rate, fed by fire events.
/// Each fire deposits a kernel of weight one; the stationary mean equals the
/// true rate. The averaging window is a fixed multiple of the readout RC so
/// single events perturb the estimate by well under the charging scale.
class RateEstimator {
 public:
  static constexpr double kWindowPerTauRc = 50.0;

  explicit RateEstimator(double tau_rc) : tau_(kWindowPerTauRc * tau_rc) {}

  double value_at(double t) const {
    if (value_ == 0.0) return 0.0;
    return value_ * std::exp(-(t - t_last_) / tau_);
  }

  void on_fire(double t) {
    value_ = value_at(t) + 1.0 / tau_;
    t_last_ = t;
  }

 private:
  double tau_;
  double value_ = 0.0;
  double t_last_ = 0.0;
};

}  // namespace snspd
