#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "sigread/rng.hpp"
#include "sigread/types.hpp"

namespace sigread {

// Dispersive-readout simulator configuration. Frequencies kappa and chi are
// given as kappa/2pi and chi_s/2pi in MHz; times in microseconds; rates in
// 1/us. The cavity decay constant used internally is pi*kappa + 2i*pi*chi_s
// per microsecond.
struct SimConfig {
  int n_states = 2;
  double readout_window_us = 10.0;  // T_r
  double sample_period_us = 0.05;
  double kappa_mhz = 0.5;
  std::vector<double> chi_mhz = {0.145, -0.145};  // one per state
  double drive_amp = 1.0;
  double noise_sigma = 0.0;
  std::vector<std::vector<double>> rates;  // rates[s][s'] = Gamma[s -> s'], 1/us
  double prep_error = 0.0;
  bool emit_initial_check = true;
  std::uint64_t seed = 0;

  std::size_t n_samples() const {
    return static_cast<std::size_t>(std::llround(readout_window_us / sample_period_us));
  }

  void validate() const {
    if (n_states < 2 || n_states > 3) throw InvalidInput("n_states must be 2 or 3");
    if (readout_window_us <= 0.0) throw InvalidInput("readout_window_us must be > 0");
    if (sample_period_us <= 0.0) throw InvalidInput("sample_period_us must be > 0");
    if (kappa_mhz <= 0.0) throw InvalidInput("kappa_mhz must be > 0");
    if (noise_sigma < 0.0) throw InvalidInput("noise_sigma must be >= 0");
    if (prep_error < 0.0 || prep_error >= 1.0)
      throw InvalidInput("prep_error must be in [0, 1)");
    if (chi_mhz.size() != static_cast<std::size_t>(n_states))
      throw InvalidInput("chi_mhz must list one shift per state");
    if (!rates.empty()) {
      if (rates.size() != static_cast<std::size_t>(n_states))
        throw InvalidInput("rates must be an n_states x n_states matrix");
      for (std::size_t s = 0; s < rates.size(); ++s) {
        if (rates[s].size() != static_cast<std::size_t>(n_states))
          throw InvalidInput("rates must be an n_states x n_states matrix");
        for (std::size_t t = 0; t < rates[s].size(); ++t) {
          if (rates[s][t] < 0.0) throw InvalidInput("rates must be >= 0");
          if (s == t && rates[s][t] != 0.0)
            throw InvalidInput("diagonal rates must be 0");
        }
      }
    }
    if (n_samples() < 1) throw InvalidInput("readout window shorter than one sample");
  }

  double rate(int from, int to) const {
    if (rates.empty()) return 0.0;
    return rates[static_cast<std::size_t>(from)][static_cast<std::size_t>(to)];
  }

  // OXF Qt scales: slow relaxation relative to the readout window.
  static SimConfig oxf_qt() {
    SimConfig cfg;
    cfg.n_states = 3;
    cfg.readout_window_us = 10.0;
    cfg.sample_period_us = 0.05;
    cfg.kappa_mhz = 0.5;
    cfg.chi_mhz = {0.145, -0.145, -0.435};
    cfg.drive_amp = 1.0;
    cfg.noise_sigma = 1.0;
    cfg.rates = {{0.0, 0.0, 0.0}, {1.0 / 189.0, 0.0, 0.0}, {0.0, 1.0 / 119.0, 0.0}};
    return cfg;
  }

  // T_1 comparable to T_r, forcing frequent mid-measurement transitions.
  static SimConfig stress() {
    SimConfig cfg = oxf_qt();
    cfg.rates = {{0.0, 0.0, 0.0},
                 {1.0 / cfg.readout_window_us, 0.0, 0.0},
                 {0.0, 1.0 / (3.0 * cfg.readout_window_us), 0.0}};
    cfg.noise_sigma = 1.0;
    return cfg;
  }
};

namespace detail {
inline Complex decay_constant(const SimConfig& cfg, int state) {
  const double pi = std::numbers::pi;
  return {pi * cfg.kappa_mhz, 2.0 * pi * cfg.chi_mhz[static_cast<std::size_t>(state)]};
}
}  // namespace detail

// Analytic solution of d(alpha)/dt = -i*eps - lambda_s * alpha from alpha0,
// with lambda_s = kappa/2 + i*chi_s in angular units.
inline Complex cavity_mean(int state, double t, const SimConfig& cfg,
                           Complex alpha0 = {0.0, 0.0}) {
  const Complex lambda = detail::decay_constant(cfg, state);
  const Complex alpha_ss = Complex{0.0, -cfg.drive_amp} / lambda;
  return alpha_ss + (alpha0 - alpha_ss) * std::exp(-lambda * t);
}

struct JumpEvent {
  double time_us;
  int new_state;
};

// Continuous-time Markov jumps on [0, T_r], chronologically ordered.
inline std::vector<JumpEvent> sample_jump_trajectory(int initial,
                                                     const SimConfig& cfg,
                                                     Rng& rng) {
  std::vector<JumpEvent> events;
  int state = initial;
  double t = 0.0;
  while (true) {
    double total = 0.0;
    for (int s = 0; s < cfg.n_states; ++s) total += cfg.rate(state, s);
    if (total <= 0.0) break;
    t += rng.exponential(total);
    if (t >= cfg.readout_window_us) break;
    double pick = rng.uniform() * total;
    int next = state;
    for (int s = 0; s < cfg.n_states; ++s) {
      pick -= cfg.rate(state, s);
      if (pick <= 0.0) {
        next = s;
        break;
      }
    }
    events.push_back({t, next});
    state = next;
  }
  return events;
}

// Generates n_per_state traces per prepared label. Each trace integrates the
// cavity response piecewise across jumps (alpha continuous at jumps), samples
// the mean at sample midpoints, and adds independent Gaussian noise per
// quadrature. Trace r draws from an rng stream derived from (seed, r), so
// output is independent of generation order.
inline TraceSet simulate_traces(const SimConfig& cfg, std::size_t n_per_state) {
  cfg.validate();
  if (n_per_state < 1) throw InvalidInput("n_per_state must be >= 1");
  const std::size_t n_samples = cfg.n_samples();
  const std::size_t n_traces = n_per_state * static_cast<std::size_t>(cfg.n_states);

  TraceSet ts;
  ts.n_traces = n_traces;
  ts.n_samples = n_samples;
  ts.n_states = cfg.n_states;
  ts.sample_period_us = cfg.sample_period_us;
  ts.data.resize(n_traces * n_samples);
  ts.prepared.resize(n_traces);
  ts.initial_check.assign(n_traces, kUnknownLabel);
  ts.final_state.resize(n_traces);

  for (std::size_t r = 0; r < n_traces; ++r) {
    const int prepared = static_cast<int>(r / n_per_state);
    Rng rng = Rng::stream(cfg.seed, r);

    // Preparation error: the pre-preparation check would have found an
    // excited state and the pulse lands the qubit somewhere other than the
    // intended label.
    int actual = prepared;
    Label check = 0;
    if (cfg.prep_error > 0.0 && rng.uniform() < cfg.prep_error) {
      int other = static_cast<int>(rng.uniform_index(
          static_cast<std::size_t>(cfg.n_states - 1)));
      if (other >= prepared) ++other;
      actual = other;
      check = static_cast<Label>(
          1 + rng.uniform_index(static_cast<std::size_t>(cfg.n_states - 1)));
    }

    const std::vector<JumpEvent> jumps = sample_jump_trajectory(actual, cfg, rng);

    Complex alpha{0.0, 0.0};
    double seg_start = 0.0;
    int state = actual;
    std::size_t jump_idx = 0;
    Complex* out = ts.data.data() + r * n_samples;
    for (std::size_t j = 0; j < n_samples; ++j) {
      const double t_mid = (static_cast<double>(j) + 0.5) * cfg.sample_period_us;
      while (jump_idx < jumps.size() && jumps[jump_idx].time_us <= t_mid) {
        alpha = cavity_mean(state, jumps[jump_idx].time_us - seg_start, cfg, alpha);
        seg_start = jumps[jump_idx].time_us;
        state = jumps[jump_idx].new_state;
        ++jump_idx;
      }
      const Complex mean = cavity_mean(state, t_mid - seg_start, cfg, alpha);
      const double ni = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
      const double nq = cfg.noise_sigma > 0.0 ? cfg.noise_sigma * rng.normal() : 0.0;
      out[j] = mean + Complex{ni, nq};
    }

    int final_state = actual;
    for (const JumpEvent& e : jumps)
      if (e.time_us < cfg.readout_window_us) final_state = e.new_state;

    ts.prepared[r] = static_cast<Label>(prepared);
    ts.final_state[r] = static_cast<Label>(final_state);
    if (cfg.emit_initial_check) ts.initial_check[r] = check;
  }
  return ts;
}

}  // namespace sigread
