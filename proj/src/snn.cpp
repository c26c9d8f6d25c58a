#include "spikestream/snn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "spikestream/errors.hpp"

namespace spikestream::snn {

PspKernel::PspKernel(double tau_m_ms, double ratio) : tau_m_(tau_m_ms), tau_s_(tau_m_ms / ratio) {
  if (!(tau_m_ms > 0) || !std::isfinite(tau_m_ms)) throw ParameterError("tau_m must be positive");
  if (!(ratio > 1.0)) throw ParameterError("tau_m / tau_s must exceed 1");
  peak_delay_ = tau_m_ * tau_s_ / (tau_m_ - tau_s_) * std::log(tau_m_ / tau_s_);
  v0_ = 1.0 / (std::exp(-peak_delay_ / tau_m_) - std::exp(-peak_delay_ / tau_s_));
}

double PspKernel::operator()(double dt) const {
  if (dt < 0) return 0.0;
  return v0_ * (std::exp(-dt / tau_m_) - std::exp(-dt / tau_s_));
}

std::optional<double> MembraneState::stationary_time() const {
  // dV/dt = -m/τm e^{-x/τm} + s/τs e^{-x/τs} = 0  =>  x = τmτs/(τm-τs) · ln(s τm / (m τs))
  const double arg = (s_ * inv_tau_s_) / (m_ * inv_tau_m_);
  if (!(arg > 0) || !std::isfinite(arg)) return std::nullopt;
  const double tau_m = 1.0 / inv_tau_m_, tau_s = 1.0 / inv_tau_s_;
  return ref_ + tau_m * tau_s / (tau_m - tau_s) * std::log(arg);
}

void check_sorted(std::span<const AfferentSpike> spikes) {
  for (std::size_t i = 1; i < spikes.size(); ++i)
    if (spikes[i].t < spikes[i - 1].t) throw OrderingError("afferent spikes not sorted at index " + std::to_string(i));
}

namespace {

double weight_of(std::span<const double> weights, std::uint32_t afferent) {
  if (afferent >= weights.size())
    throw ShapeError("afferent " + std::to_string(afferent) + " has no weight (" + std::to_string(weights.size()) + ")");
  return weights[afferent];
}

}  // namespace

double evaluate_voltage(const PspKernel& kernel, std::span<const double> weights,
                        std::span<const AfferentSpike> spikes, double t) {
  check_sorted(spikes);
  MembraneState state(kernel, spikes.empty() ? t : std::min(t, spikes.front().t));
  for (const AfferentSpike& sp : spikes) {
    if (sp.t > t) break;
    state.advance(sp.t);
    state.inject(weight_of(weights, sp.afferent));
  }
  return state.value_at(t);
}

std::optional<double> first_crossing(const MembraneState& state, double lo, double hi, double threshold) {
  if (!(hi > lo)) return std::nullopt;
  if (state.value_at(lo) > threshold) return lo;
  // At most one stationary point per stretch. Below threshold at lo, the voltage
  // either rises to a maximum or first dips to a minimum; bracket the rising part.
  double a = lo, b = hi;
  auto ts = state.stationary_time();
  if (ts && *ts > lo && *ts < hi) {
    if (state.value_at(*ts) > threshold) b = *ts;
    else a = *ts;
  }
  if (!(state.value_at(b) > threshold)) return std::nullopt;
  for (int i = 0; i < 200 && b - a > 1e-13 * std::max(1.0, std::abs(b)); ++i) {
    const double mid = 0.5 * (a + b);
    if (state.value_at(mid) > threshold) b = mid;
    else a = mid;
  }
  return b;
}

ResetTrace evaluate_voltage_with_reset(const PspKernel& kernel, std::span<const double> weights,
                                       std::span<const AfferentSpike> spikes, double t, const ResetParams& params) {
  check_sorted(spikes);
  if (!(params.threshold > params.reset)) throw ParameterError("threshold must exceed reset");
  ResetTrace trace;
  MembraneState state(kernel, 0.0);
  double cursor = 0.0;
  auto run_until = [&](double until) {
    while (true) {
      auto cross = first_crossing(state, cursor, until, params.threshold);
      if (!cross) break;
      trace.output_spikes.push_back(*cross);
      state.advance(*cross);
      state.set(params.reset, 0.0);
      cursor = *cross;
    }
    state.advance(until);
    cursor = until;
  };
  std::size_t i = 0;
  while (i < spikes.size() && spikes[i].t <= t) {
    double ts = std::max(spikes[i].t, cursor);
    run_until(ts);
    while (i < spikes.size() && spikes[i].t <= ts) state.inject(weight_of(weights, spikes[i++].afferent));
  }
  run_until(t);
  trace.voltage = state.value();
  return trace;
}

void scan_stretch(const MembraneState& state, double lo, double hi, PeakResult& best, double earliest) {
  if (hi < earliest) return;
  if (auto ts = state.stationary_time(); ts && *ts > lo && *ts < hi && *ts >= earliest) {
    double v = state.value_at(*ts);
    if (v > best.v_peak) best = {*ts, v};
  }
  double v = state.value_at(hi);
  if (v > best.v_peak) best = {hi, v};
}

PeakResult detect_peak(const PspKernel& kernel, std::span<const double> weights,
                       std::span<const AfferentSpike> spikes, double t_start, double range, double resolution) {
  if (!(range > 0)) throw ParameterError("peak search range must be positive");
  check_sorted(spikes);
  const double t_end = t_start + range;
  const double first = t_start + std::min(resolution, range);

  MembraneState state(kernel, spikes.empty() ? t_start : std::min(t_start, spikes.front().t));
  std::size_t i = 0;
  for (; i < spikes.size() && spikes[i].t <= t_start; ++i) {
    state.advance(spikes[i].t);
    state.inject(weight_of(weights, spikes[i].afferent));
  }
  state.advance(t_start);

  // Breakpoints (input times, the earliest admissible candidate, the range end)
  // are visited in time order, so strict improvement keeps the earliest maximiser.
  PeakResult best{first, -std::numeric_limits<double>::infinity()};
  double lo = t_start;
  while (true) {
    double hi = t_end;
    if (first > lo) hi = std::min(hi, first);
    if (i < spikes.size() && spikes[i].t < hi) hi = spikes[i].t;
    scan_stretch(state, lo, hi, best, first);
    if (hi >= t_end) break;
    state.advance(hi);
    while (i < spikes.size() && spikes[i].t == hi) state.inject(weight_of(weights, spikes[i++].afferent));
    lo = hi;
  }
  return best;
}

}  // namespace spikestream::snn
