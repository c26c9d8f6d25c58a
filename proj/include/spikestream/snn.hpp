#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace spikestream::snn {

// Double-exponential PSP kernel scaled so its maximum is exactly 1.
// Times are milliseconds.
class PspKernel {
 public:
  static constexpr double kDefaultRatio = 4.0;

  explicit PspKernel(double tau_m_ms, double ratio = kDefaultRatio);

  double tau_m() const { return tau_m_; }
  double tau_s() const { return tau_s_; }
  double v0() const { return v0_; }
  // Delay at which the kernel peaks.
  double peak_delay() const { return peak_delay_; }

  // Zero for dt < 0.
  double operator()(double dt) const;

 private:
  double tau_m_;
  double tau_s_;
  double v0_;
  double peak_delay_;
};

struct AfferentSpike {
  double t = 0.0;  // ms
  std::uint32_t afferent = 0;
  friend bool operator==(const AfferentSpike&, const AfferentSpike&) = default;
};

// Collapsed state of a neuron whose inputs all share one kernel:
//   V(t) = m·e^{-(t-ref)/τm} - s·e^{-(t-ref)/τs} + V_rest
// Each weighted input spike adds w·V0 to both m and s.
class MembraneState {
 public:
  explicit MembraneState(const PspKernel& kernel, double t_ref = 0.0)
      : inv_tau_m_(1.0 / kernel.tau_m()), inv_tau_s_(1.0 / kernel.tau_s()), v0_(kernel.v0()), ref_(t_ref) {}

  double ref_time() const { return ref_; }
  double m() const { return m_; }
  double s() const { return s_; }

  // Re-expresses the state at a later reference time.
  void advance(double t) {
    if (t == ref_) return;
    m_ *= std::exp(-(t - ref_) * inv_tau_m_);
    s_ *= std::exp(-(t - ref_) * inv_tau_s_);
    ref_ = t;
  }
  // Multiplicative form of advance() for callers sharing one decay across many neurons.
  void advance(double t, double decay_m, double decay_s) {
    m_ *= decay_m;
    s_ *= decay_s;
    ref_ = t;
  }
  void inject(double weight) {
    m_ += weight * v0_;
    s_ += weight * v0_;
  }
  void add(double dm, double ds) {
    m_ += dm;
    s_ += ds;
  }
  void set(double m, double s) {
    m_ = m;
    s_ = s;
  }
  double value() const { return m_ - s_; }
  double value_at(double t) const {
    return m_ * std::exp(-(t - ref_) * inv_tau_m_) - s_ * std::exp(-(t - ref_) * inv_tau_s_);
  }
  // Time of dV/dt = 0 after the reference, if one exists.
  std::optional<double> stationary_time() const;

 private:
  double inv_tau_m_;
  double inv_tau_s_;
  double v0_;
  double ref_;
  double m_ = 0.0;
  double s_ = 0.0;
};

// Throws OrderingError when spike times decrease.
void check_sorted(std::span<const AfferentSpike> spikes);

// Voltage at t from every spike with time <= t (no reset).
double evaluate_voltage(const PspKernel& kernel, std::span<const double> weights,
                        std::span<const AfferentSpike> spikes, double t);

struct ResetParams {
  double threshold = 1.0;
  double reset = 0.0;
};

struct ResetTrace {
  double voltage = 0.0;
  std::vector<double> output_spikes;
};

// Integrates forward from time 0 and fires whenever V exceeds the threshold; a
// firing replaces the state with the reset potential, dropping earlier PSPs.
ResetTrace evaluate_voltage_with_reset(const PspKernel& kernel, std::span<const double> weights,
                                       std::span<const AfferentSpike> spikes, double t, const ResetParams& params);

// Earliest time in (lo, hi] at which an increasing stretch of `state` exceeds
// `threshold`, given no input arrives inside the interval.
std::optional<double> first_crossing(const MembraneState& state, double lo, double hi, double threshold);

struct PeakResult {
  double t_peak = 0.0;
  double v_peak = 0.0;
};

// Candidate-set maximisation of V over (t_start, t_start + range]. Candidates
// earlier than t_start + resolution (1 µs by default) are not admitted, so every
// segment advances by at least the resolution.
inline constexpr double kPeakResolutionMs = 1e-3;
// Segment starts this close to the end of a sample would cover no time; repeated
// 1 µs advances in floating point can land a few ulps short of the end.
inline constexpr double kEndSlackMs = 1e-9;

// Scans one inter-input stretch (lo, hi] where `state` is referenced at lo and
// updates `best` with strictly larger values at times >= earliest.
void scan_stretch(const MembraneState& state, double lo, double hi, PeakResult& best,
                  double earliest = -std::numeric_limits<double>::infinity());

PeakResult detect_peak(const PspKernel& kernel, std::span<const double> weights,
                       std::span<const AfferentSpike> spikes, double t_start, double range,
                       double resolution = kPeakResolutionMs);

}  // namespace spikestream::snn
