#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "snspd/dynamics.hpp"
#include "snspd/rng.hpp"
#include "snspd/tcspc.hpp"
#include "snspd/types.hpp"

namespace snspd {

enum class EventSource : std::uint8_t { Photon = 0, Dark = 1, Crosstalk = 2 };

struct SimEvent {
  double time = 0.0;  // s
  EventSource source = EventSource::Photon;
};

/// True (pre-jitter) detection times of one channel. Strictly increasing;
/// consecutive gaps are never shorter than the detector's t_dead.
struct EventStream {
  std::uint16_t channel = 0;
  std::vector<double> times;  // s
};

struct ChannelReport {
  std::uint16_t channel = 0;
  std::uint64_t photon_counts = 0;
  std::uint64_t dark_counts = 0;
  std::uint64_t crosstalk_counts = 0;
  bool latched = false;
  std::optional<std::uint64_t> latch_time_ps = {};
  double configured_flux = 0.0;  // photons/s
  double delivered_flux = 0.0;   // photons/s after the alignment tap

  std::uint64_t total() const { return photon_counts + dark_counts + crosstalk_counts; }
};

struct SimReport {
  std::vector<ChannelReport> rows;
};

struct SourceOptions {
  enum class Kind { Cw, Pulsed } kind = Kind::Cw;
  double pulse_period = 100e-9;  // s, pulsed source only
};

/// Homogeneous Poisson process on [0, duration) via exponential gaps.
inline std::vector<double> generate_poisson_arrivals(double rate, double duration,
                                                     RandomStream& rng) {
  std::vector<double> times;
  if (rate <= 0.0) return times;
  times.reserve(static_cast<std::size_t>(rate * duration * 1.05) + 16);
  double t = rng.exponential(rate);
  while (t < duration) {
    times.push_back(t);
    t += rng.exponential(rate);
  }
  return times;
}

inline std::vector<double> generate_poisson_arrivals(double rate, double duration,
                                                     std::uint64_t seed) {
  RandomStream rng(seed);
  return generate_poisson_arrivals(rate, duration, rng);
}

/// Deterministic pulse train at offset, offset + period, ... within
/// [0, duration). Used for sync-referenced jitter measurements.
inline std::vector<double> generate_periodic_arrivals(double period, double duration,
                                                      double offset) {
  std::vector<double> times;
  if (period <= 0.0) return times;
  times.reserve(static_cast<std::size_t>(duration / period) + 1);
  for (double t = offset; t < duration; t += period) times.push_back(t);
  return times;
}

/// Total crosstalk arrival rate on `target`: every other channel leaks its
/// delivered flux attenuated by the configured dB entry.
inline double crosstalk_rate(const ValidatedConfig& cfg, std::size_t target) {
  double rate = 0.0;
  for (std::size_t k = 0; k < cfg.channel_count(); ++k) {
    if (k == target) continue;
    rate += cfg.delivered_flux(k) * db_to_linear(cfg.crosstalk_db(target, k));
  }
  return rate;
}

/// Superposition of the independent per-source leak processes; generated as
/// one Poisson process at the summed rate so the stream depends only on the
/// target channel's substream seed.
inline std::vector<double> crosstalk_arrivals(const ValidatedConfig& cfg, std::size_t target,
                                              RandomStream& rng) {
  return generate_poisson_arrivals(crosstalk_rate(cfg, target), cfg.duration(), rng);
}

inline std::vector<double> crosstalk_arrivals(const ValidatedConfig& cfg, std::size_t target,
                                              std::uint64_t seed) {
  RandomStream rng(seed);
  return crosstalk_arrivals(cfg, target, rng);
}

/// Acceptance draws for the three candidate streams. Arrival generation and
/// thinning share one stream per kind, consumed in time order within the
/// kind, so results do not depend on how candidates interleave.
struct ChannelDecisionStreams {
  RandomStream photon;
  RandomStream dark;
  RandomStream crosstalk;
};

struct ChannelSimResult {
  std::vector<SimEvent> fires;  // strictly increasing times
  std::uint64_t photon_counts = 0;
  std::uint64_t dark_counts = 0;
  std::uint64_t crosstalk_counts = 0;
  bool latched = false;
  double latch_time = 0.0;  // s, valid when latched

  EventStream stream(std::uint16_t channel) const {
    EventStream s;
    s.channel = channel;
    s.times.reserve(fires.size());
    for (const SimEvent& e : fires) s.times.push_back(e.time);
    return s;
  }
};

/// Runs the detector dynamics over merged candidate arrivals. Photon and
/// crosstalk candidates fire with detection_probability(effective bias) times
/// the recovery factor; dark candidates are gated by recovery only (their
/// rate is already bias-resolved). Rate estimate and latch state update after
///每 fire; a latched channel produces nothing further.
inline ChannelSimResult simulate_channel(const ChannelConfig& cfg,
                                         const std::vector<double>& photons,
                                         const std::vector<double>& darks,
                                         const std::vector<double>& crosstalk,
                                         ChannelDecisionStreams& rng) {
  ChannelSimResult out;
  out.fires.reserve(photons.size() / 2 + darks.size() + crosstalk.size() / 2 + 16);

  DetectorState state;
  RateEstimator rate(cfg.readout.tau_rc);
  const bool ac = cfg.readout.coupling == Coupling::AcCoupled;

  std::size_t ip = 0, id = 0, ix = 0;
  while (!state.latched &&
         (ip < photons.size() || id < darks.size() || ix < crosstalk.size())) {
    // Next candidate in time order; ties break photon < dark < crosstalk.
    EventSource src = EventSource::Photon;
    double t = ip < photons.size() ? photons[ip] : std::numeric_limits<double>::infinity();
    if (id < darks.size() && darks[id] < t) {
      t = darks[id];
      src = EventSource::Dark;
    }
    if (ix < crosstalk.size() && crosstalk[ix] < t) {
      t = crosstalk[ix];
      src = EventSource::Crosstalk;
    }

    double u = 0.0;
    switch (src) {
      case EventSource::Photon:
        u = rng.photon.uniform01();
        ++ip;
        break;
      case EventSource::Dark:
        u = rng.dark.uniform01();
        ++id;
        break;
      case EventSource::Crosstalk:
        u = rng.crosstalk.uniform01();
        ++ix;
        break;
    }

    const double rec =
        state.last_fire_time ? recovery_factor(cfg.detector, t - *state.last_fire_time) : 1.0;
    if (rec <= 0.0) continue;

    double p = rec;
    if (src != EventSource::Dark) {
      const double i_eff =
          effective_bias(cfg.readout, cfg.i_set, ac ? rate.value_at(t) : 0.0);
      state.effective_bias = i_eff;
      p = detection_probability(cfg.detector, i_eff) * rec;
    }
    if (u >= p) continue;

    out.fires.push_back({t, src});
    state.last_fire_time = t;
    switch (src) {
      case EventSource::Photon: ++out.photon_counts; break;
      case EventSource::Dark: ++out.dark_counts; break;
      case EventSource::Crosstalk: ++out.crosstalk_counts; break;
    }

    rate.on_fire(t);
    const double i_after = effective_bias(cfg.readout, cfg.i_set, ac ? rate.value_at(t) : 0.0);
    state.effective_bias = i_after;
    if (latch_check(cfg.detector, i_after)) {
      state.latched = true;
      out.latched = true;
      out.latch_time = t;
    }
  }
  return out;
}

struct ReceiverResult {
  std::vector<TimeTag> tags;  // globally sorted by (time_ps, channel)
  SimReport report;           // source attribution of the emitted tags
  std::uint16_t channel_count = 0;
};

namespace detail {

struct ChannelTags {
  std::vector<TimeTag> tags;
  ChannelReport report;
};

inline ChannelTags run_one_channel(const ValidatedConfig& cfg, std::size_t ch,
                                   const SourceOptions& source) {
  const ChannelConfig& c = cfg.channel(ch);
  const std::uint64_t seed = cfg.seed();
  const auto ch32 = static_cast<std::uint32_t>(ch);

  ChannelDecisionStreams rng{
      RandomStream(substream_seed(seed, ch32, StreamKind::Photon)),
      RandomStream(substream_seed(seed, ch32, StreamKind::Dark)),
      RandomStream(substream_seed(seed, ch32, StreamKind::Crosstalk))};

  std::vector<double> photons;
  if (source.kind == SourceOptions::Kind::Cw) {
    photons = generate_poisson_arrivals(cfg.delivered_flux(ch), cfg.duration(), rng.photon);
  } else {
    // Pulse train centered half a period in so jitter never wraps the sync
    // fold; the alignment tap becomes a Bernoulli thinning of the train.
    photons = generate_periodic_arrivals(source.pulse_period, cfg.duration(),
                                         source.pulse_period / 2.0);
    if (c.input_flux > 0.0 && cfg.delivered_flux(ch) < c.input_flux) {
      const double keep = cfg.delivered_flux(ch) / c.input_flux;
      std::vector<double> kept;
      kept.reserve(photons.size());
      for (double t : photons)
        if (rng.photon.uniform01() < keep) kept.push_back(t);
      photons = std::move(kept);
    }
    if (c.input_flux == 0.0) photons.clear();
  }
  std::vector<double> darks =
      generate_poisson_arrivals(dark_rate(c.detector, c.i_set), cfg.duration(), rng.dark);
  std::vector<double> xtalk = crosstalk_arrivals(cfg, ch, rng.crosstalk);

  ChannelSimResult sim = simulate_channel(c, photons, darks, xtalk, rng);

  // Detector/amplifier jitter per fired event, then the time tagger adds its
  // own jitter and dead time. Both consume the channel's Jitter stream in
  // fire order.
  RandomStream jitter_rng(substream_seed(seed, ch32, StreamKind::Jitter));
  std::vector<SimEvent> events = std::move(sim.fires);
  if (c.i_set > 0.0) {
    const double sigma = jitter_sigma(c.detector, c.readout, c.i_set);
    if (sigma > 0.0)
      for (SimEvent& e : events) e.time += sigma * jitter_rng.gaussian();
  }
  events = apply_tcspc_events(std::move(events), c.readout, jitter_rng);

  ChannelTags out;
  out.report.channel = c.channel_id;
  out.report.latched = sim.latched;
  if (sim.latched)
    out.report.latch_time_ps = static_cast<std::uint64_t>(
        std::llround(std::max(0.0, sim.latch_time) * 1e12));
  out.report.configured_flux = c.input_flux;
  out.report.delivered_flux = cfg.delivered_flux(ch);

  out.tags.reserve(events.size());
  for (const SimEvent& e : events) {
    const double ps = std::max(0.0, e.time) * 1e12;
    out.tags.push_back({c.channel_id, static_cast<std::uint64_t>(std::llround(ps))});
    switch (e.source) {
      case EventSource::Photon: ++out.report.photon_counts; break;
      case EventSource::Dark: ++out.report.dark_counts; break;
      case EventSource::Crosstalk: ++out.report.crosstalk_counts; break;
    }
  }
  return out;
}

}  // namespace detail

/// Simulates every channel (channels are independent and may run on several
/// threads), applies per-event jitter and the tagger model, and merges the
/// per-channel streams into one (time_ps, channel)-sorted tag list. Output is
/// bitwise deterministic for a fixed (config, seed), whatever the thread
/// count.
inline ReceiverResult simulate_receiver(const ValidatedConfig& cfg, unsigned threads = 1,
                                        const SourceOptions& source = {}) {
  const std::size_t n = cfg.channel_count();
  std::vector<detail::ChannelTags> per_channel(n);

  if (threads <= 1 || n == 1) {
    for (std::size_t ch = 0; ch < n; ++ch)
      per_channel[ch] = detail::run_one_channel(cfg, ch, source);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t ch = next.fetch_add(1); ch < n; ch = next.fetch_add(1))
        per_channel[ch] = detail::run_one_channel(cfg, ch, source);
    };
    std::vector<std::thread> pool;
    const unsigned k = std::min<unsigned>(threads, static_cast<unsigned>(n));
    pool.reserve(k);
    for (unsigned i = 0; i < k; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ReceiverResult out;
  out.channel_count = static_cast<std::uint16_t>(n);
  std::size_t total = 0;
  for (const auto& pc : per_channel) total += pc.tags.size();
  out.tags.reserve(total);
  for (auto& pc : per_channel) {
    out.tags.insert(out.tags.end(), pc.tags.begin(), pc.tags.end());
    out.report.rows.push_back(pc.report);
  }
  std::sort(out.tags.begin(), out.tags.end(), [](const TimeTag& a, const TimeTag& b) {
    return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.channel < b.channel;
  });
  return out;
}

}  // namespace snspd
