#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace snspd {

/// Raised for malformed or inconsistent user input (config files, survey
/// files, bad command arguments). Distinct from std::runtime_error so the
/// CLI can map it to the usage/config exit code.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Coupling : std::uint8_t {
  AcCoupled,       // bias tee only; coupling capacitor can over-bias at high rate
  LrPathToGround,  // inductor-resistor shunt; bias independent of count rate
};

/// Per-channel physical detector parameters. Bias currents are expressed in
/// normalized units (fraction of the reference current where dark counts
/// reach 10 % of the total count rate at 1e6 photons/s input); times in
/// seconds; rates in events/s.
struct DetectorModel {
  double eta_internal = 0.40;  // plateau detection efficiency, [0,1]
  double i_mid = 0.80;         // normalized bias at half plateau
  double i_width = 0.05;       // logistic width of the bias response
  double dcr_amp = 4.4e4;      // dark rate at i = 1, events/s
  double dcr_slope = 23.0;     // exponential dark-rate slope per unit bias
  double t_dead = 10e-9;       // hard blind time after a detection, s
  double t_half = 25e-9;       // delay to 50 % efficiency recovery, s
  double tau_recovery = 6e-9;  // recovery transition width, s
  double sigma_intrinsic = 7e-12;  // bias-independent timing jitter, s (rms)
  double jitter_coeff = 0.0;       // detector jitter term scaling as 1/bias, s at unit bias
  double i_latch = 1.05;           // normalized bias above which the wire latches
};

/// Amplifier-chain and time-tagger descriptor for one channel.
struct ReadoutModel {
  Coupling coupling = Coupling::LrPathToGround;
  double overbias_coeff = 0.0;  // dimensionless, AC-coupled only
  double tau_rc = 20e-9;        // coupling capacitor time constant, s (AC-coupled only)
  double sigma_electrical_at_unit_bias = 8.5e-12;  // electrical jitter at i = 1, s (rms)
  double tcspc_dead_time = 20e-9;                  // non-paralyzable tagger dead time, s
  double tcspc_sigma = 31.85e-12;                  // tagger channel jitter, s (rms)
};

struct ChannelConfig {
  std::uint16_t channel_id = 0;
  DetectorModel detector;
  ReadoutModel readout;
  double i_set = 1.0;         // externally applied bias, normalized, [0, 1.2]
  double input_flux = 1e6;    // photons/s launched into the channel fiber
  bool is_alignment_device = false;  // 3 dB MMI tap present; halves delivered flux
};

struct ReceiverConfig {
  std::vector<ChannelConfig> channels;
  // N x N crosstalk matrix in dB, row-major, entry [target*N + source].
  // Diagonal entries are ignored (0 sentinel). Empty selects the constant
  // -60 dB default.
  std::vector<double> crosstalk_db;
  double duration = 1.0;  // s
  std::uint64_t seed = 1;
};

/// (channel, timestamp) record; the universal event currency and the wire
/// format payload. Timestamps are picoseconds from run start.
struct TimeTag {
  std::uint16_t channel = 0;
  std::uint64_t time_ps = 0;

  friend bool operator==(const TimeTag&, const TimeTag&) = default;
};

inline constexpr double kAlignmentTapDb = -3.0;
inline constexpr double kDefaultCrosstalkDb = -60.0;
inline constexpr double kMaxCrosstalkDb = -20.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

inline std::vector<double> constant_crosstalk_matrix(std::size_t n, double off_diag_db) {
  std::vector<double> m(n * n, off_diag_db);
  for (std::size_t i = 0; i < n; ++i) m[i * n + i] = 0.0;
  return m;
}

/// A ReceiverConfig that passed every invariant check. Carries the original
/// config untouched plus derived per-channel quantities, so validating an
/// already-validated config is a no-op.
class ValidatedConfig {
 public:
  static ValidatedConfig validate(const ReceiverConfig& raw);

  const ReceiverConfig& raw() const { return raw_; }
  std::size_t channel_count() const { return raw_.channels.size(); }
  const ChannelConfig& channel(std::size_t i) const { return raw_.channels.at(i); }
  double duration() const { return raw_.duration; }
  std::uint64_t seed() const { return raw_.seed; }

  /// Photon flux reaching the detector; the MMI tap on alignment devices
  /// costs 3 dB relative to the configured input flux.
  double delivered_flux(std::size_t i) const { return delivered_flux_.at(i); }

  double crosstalk_db(std::size_t target, std::size_t source) const {
    return crosstalk_.at(target * channel_count() + source);
  }

 private:
  ReceiverConfig raw_;
  std::vector<double> delivered_flux_;
  std::vector<double> crosstalk_;
};

namespace detail {

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

inline std::string ch_prefix(std::size_t i) { return "channel " + std::to_string(i) + ": "; }

inline void validate_detector(const DetectorModel& d, std::size_t i) {
  const auto p = ch_prefix(i);
  check(d.eta_internal >= 0.0 && d.eta_internal <= 1.0,
        p + "eta_internal = " + std::to_string(d.eta_internal) + " outside [0, 1]");
  check(d.i_width > 0.0, p + "i_width must be > 0");
  check(d.i_mid < 1.0, p + "i_mid must be < 1 (plateau inside the normalized bias range)");
  check(d.dcr_amp >= 0.0, p + "dcr_amp must be >= 0");
  check(d.t_dead > 0.0, p + "t_dead must be > 0");
  check(d.t_half > 0.0, p + "t_half must be > 0");
  check(d.tau_recovery > 0.0, p + "tau_recovery must be > 0");
  check(d.t_half > d.t_dead, p + "t_half must be > t_dead");
  check(d.sigma_intrinsic >= 0.0, p + "sigma_intrinsic must be >= 0");
  check(d.jitter_coeff >= 0.0, p + "jitter_coeff must be >= 0");
  check(d.i_latch > 0.0, p + "i_latch must be > 0");
}

inline void validate_readout(const ReadoutModel& r, std::size_t i) {
  const auto p = ch_prefix(i);
  check(r.overbias_coeff >= 0.0, p + "overbias_coeff must be >= 0");
  check(r.sigma_electrical_at_unit_bias >= 0.0, p + "sigma_electrical_at_unit_bias must be >= 0");
  check(r.tcspc_dead_time >= 0.0, p + "tcspc_dead_time must be >= 0");
  check(r.tcspc_sigma >= 0.0, p + "tcspc_sigma must be >= 0");
  if (r.coupling == Coupling::AcCoupled)
    check(r.tau_rc > 0.0, p + "tau_rc must be > 0 on AC-coupled readout");
}

}  // namespace detail

inline ValidatedConfig ValidatedConfig::validate(const ReceiverConfig& raw) {
  using detail::check;
  const std::size_t n = raw.channels.size();
  check(n > 0, "config has no channels");
  check(raw.duration > 0.0, "duration must be > 0");

  ValidatedConfig v;
  v.raw_ = raw;
  v.delivered_flux_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const ChannelConfig& c = raw.channels[i];
    check(c.channel_id == i, detail::ch_prefix(i) + "channel_id = " +
                                 std::to_string(c.channel_id) + " does not match position");
    detail::validate_detector(c.detector, i);
    detail::validate_readout(c.readout, i);
    check(c.i_set >= 0.0 && c.i_set <= 1.2,
          detail::ch_prefix(i) + "i_set = " + std::to_string(c.i_set) + " outside [0, 1.2]");
    check(c.input_flux >= 0.0, detail::ch_prefix(i) + "input_flux must be >= 0");
    v.delivered_flux_.push_back(c.is_alignment_device
                                    ? c.input_flux * db_to_linear(kAlignmentTapDb)
                                    : c.input_flux);
  }

  if (raw.crosstalk_db.empty()) {
    v.crosstalk_ = constant_crosstalk_matrix(n, kDefaultCrosstalkDb);
  } else {
    check(raw.crosstalk_db.size() == n * n,
          "crosstalk matrix has " + std::to_string(raw.crosstalk_db.size()) +
              " entries, expected " + std::to_string(n * n));
    v.crosstalk_ = raw.crosstalk_db;
    for (std::size_t t = 0; t < n; ++t)
      for (std::size_t s = 0; s < n; ++s) {
        if (t == s) continue;
        check(v.crosstalk_[t * n + s] <= kMaxCrosstalkDb,
              "crosstalk[" + std::to_string(t) + "][" + std::to_string(s) +
                  "] = " + std::to_string(v.crosstalk_[t * n + s]) + " dB exceeds " +
                  std::to_string(kMaxCrosstalkDb) + " dB");
      }
  }
  return v;
}

/// Checks every config invariant and precomputes delivered fluxes.
/// Idempotent: validating v.raw() again reproduces v.
inline ValidatedConfig validate_config(const ReceiverConfig& raw) {
  return ValidatedConfig::validate(raw);
}

}  // namespace snspd
