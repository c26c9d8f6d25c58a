#include "spikestream/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "spikestream/errors.hpp"
#include "random.hpp"

namespace spikestream::events {
namespace {

using detail::mix_seed;
using detail::uniform01;

struct Frame {
  double cx, cy, nx, ny;
  double u_min, u_max, b_min, b_max;
};

Frame make_frame(const SyntheticPatternSpec& spec) {
  Frame f{};
  f.cx = (spec.geometry.width + 1) / 2.0;
  f.cy = (spec.geometry.height + 1) / 2.0;
  double theta = spec.orientation_deg * std::numbers::pi / 180.0;
  f.nx = std::cos(theta);
  f.ny = std::sin(theta);
  f.u_min = f.b_min = 1e300;
  f.u_max = f.b_max = -1e300;
  for (int x : {1, spec.geometry.width})
    for (int y : {1, spec.geometry.height}) {
      double u = (x - f.cx) * f.nx + (y - f.cy) * f.ny;
      double b = -(x - f.cx) * f.ny + (y - f.cy) * f.nx;
      f.u_min = std::min(f.u_min, u);
      f.u_max = std::max(f.u_max, u);
      f.b_min = std::min(f.b_min, b);
      f.b_max = std::max(f.b_max, b);
    }
  return f;
}

double positive_mod(double a, double m) {
  double r = std::fmod(a, m);
  return r < 0 ? r + m : r;
}

struct Interval {
  double lo, hi;
};

// Covered stretch of the drift coordinate s = u - centre(t) (mod period) for a pixel
// at lateral coordinate b.
std::vector<Interval> coverage(const SyntheticPatternSpec& spec, double b, double lateral) {
  switch (spec.kind) {
    case PatternKind::Bar: return {{0.0, spec.bar_width_px}};
    case PatternKind::FilledSquare: {
      double half = spec.shape_size_px / 2.0;
      if (std::abs(b - lateral) > half) return {};
      return {{0.0, spec.shape_size_px}};
    }
    case PatternKind::HollowSquare: {
      double half = spec.shape_size_px / 2.0;
      double d = std::abs(b - lateral);
      if (d > half) return {};
      if (d > half - 1.0) return {{0.0, spec.shape_size_px}};
      return {{0.0, 1.0}, {spec.shape_size_px - 1.0, spec.shape_size_px}};
    }
  }
  return {};
}

}  // namespace

void SyntheticPatternSpec::validate() const {
  if (geometry.empty()) throw ParameterError("synthetic spec has zero-area geometry");
  if (geometry.width > 65535 || geometry.height > 65535) throw ParameterError("geometry exceeds 16 bits");
  if (!(velocity_px_per_ms > 0)) throw ParameterError("velocity must be positive");
  if (!(noise_rate_per_ms >= 0)) throw ParameterError("noise rate must be non-negative");
  if (duration < 0) throw ParameterError("negative duration");
  if (!(bar_width_px > 0) || !(shape_size_px > 2.0)) throw ParameterError("pattern size too small");
  if (spacing_px < 0 || !(timing_jitter_us >= 0)) throw ParameterError("negative spacing or jitter");
}

double pattern_period(const SyntheticPatternSpec& spec) {
  if (spec.spacing_px > 0) return spec.spacing_px;
  Frame f = make_frame(spec);
  double extent = spec.kind == PatternKind::Bar ? spec.bar_width_px : spec.shape_size_px;
  return (f.u_max - f.u_min) + extent + 1.0;
}

EventStream generate_synthetic(const SyntheticPatternSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  // Draw every optional parameter even when fixed, so the noise sequence does not
  // depend on which fields the caller pinned.
  const double period = pattern_period(spec);
  double phase = uniform01(rng) * period;
  bool reverse = uniform01(rng) < 0.5;
  Frame frame = make_frame(spec);
  double lateral = (uniform01(rng) - 0.5) * 0.25 * (frame.b_max - frame.b_min);
  if (spec.phase_px) phase = *spec.phase_px;
  if (spec.reverse) reverse = *spec.reverse;
  if (spec.lateral_offset_px) lateral = *spec.lateral_offset_px;

  EventStream out;
  out.geometry = spec.geometry;
  out.duration = spec.duration;
  out.label = spec.label;
  if (spec.duration == 0) return out;

  const double v = spec.velocity_px_per_ms * 1e-3;  // px per µs
  const double step = period / v;
  const double horizon = static_cast<double>(spec.duration);
  auto emit = [&](int x, int y, double t, Polarity p) {
    if (spec.timing_jitter_us > 0) t += (2.0 * uniform01(rng) - 1.0) * spec.timing_jitter_us;
    auto ti = static_cast<Microseconds>(std::llround(t));
    if (ti < 0 || ti >= spec.duration) return;
    out.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), ti, p});
  };

  for (int y = 1; y <= spec.geometry.height; ++y) {
    for (int x = 1; x <= spec.geometry.width; ++x) {
      double u = (x - frame.cx) * frame.nx + (y - frame.cy) * frame.ny;
      double b = -(x - frame.cx) * frame.ny + (y - frame.cy) * frame.nx;
      double s0 = u - phase;
      for (const Interval& iv : coverage(spec, b, lateral)) {
        // Forward drift lowers s: the pixel enters at s = hi, leaves at s = lo.
        double enter = reverse ? iv.lo : iv.hi;
        double leave = reverse ? iv.hi : iv.lo;
        for (auto [edge, pol] : {std::pair{enter, Polarity::On}, std::pair{leave, Polarity::Off}}) {
          double first = reverse ? positive_mod(edge - s0, period) / v : positive_mod(s0 - edge, period) / v;
          for (double t = first; t < horizon; t += step) emit(x, y, t, pol);
        }
      }
    }
  }

  if (spec.noise_rate_per_ms > 0) {
    const double rate = spec.noise_rate_per_ms * 1e-3;  // per µs
    double t = 0.0;
    while (true) {
      t += -std::log1p(-uniform01(rng)) / rate;
      if (t >= horizon) break;
      int x = 1 + static_cast<int>(uniform01(rng) * spec.geometry.width);
      int y = 1 + static_cast<int>(uniform01(rng) * spec.geometry.height);
      Polarity p = uniform01(rng) < 0.5 ? Polarity::Off : Polarity::On;
      auto ti = static_cast<Microseconds>(t);
      if (ti < spec.duration)
        out.events.push_back({static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), ti, p});
    }
  }
  std::stable_sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
  return out;
}

SyntheticPatternSpec class_pattern(const DatasetSpec& spec, int label) {
  if (label < 0 || label >= kMaxSyntheticClasses)
    throw RangeError("synthetic class " + std::to_string(label) + " out of range");
  SyntheticPatternSpec p;
  p.geometry = spec.geometry;
  p.duration = spec.duration;
  p.velocity_px_per_ms = spec.velocity_px_per_ms;
  p.noise_rate_per_ms = spec.noise_rate_per_ms;
  p.bar_width_px = spec.bar_width_px;
  p.spacing_px = spec.spacing_px;
  p.timing_jitter_us = spec.timing_jitter_us;
  p.label = label;
  if (label < 4) {
    p.kind = PatternKind::Bar;
    p.orientation_deg = 45.0 * label;
  } else {
    p.kind = label == 4 ? PatternKind::FilledSquare : PatternKind::HollowSquare;
    p.orientation_deg = 0.0;
    p.shape_size_px = std::max(4.0, std::min(spec.geometry.width, spec.geometry.height) / 3.0);
    p.spacing_px = 0.0;
  }
  return p;
}

std::vector<EventStream> generate_dataset(const DatasetSpec& spec, std::uint64_t seed) {
  if (spec.classes < 1 || spec.classes > kMaxSyntheticClasses)
    throw ParameterError("dataset classes must be in 1.." + std::to_string(kMaxSyntheticClasses));
  if (spec.per_class < 0) throw ParameterError("negative per-class count");
  std::vector<EventStream> out;
  out.reserve(static_cast<std::size_t>(spec.classes) * spec.per_class);
  for (int c = 0; c < spec.classes; ++c) {
    for (int i = 0; i < spec.per_class; ++i) {
      std::uint64_t s = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(c)), static_cast<std::uint64_t>(i));
      std::mt19937_64 rng(s);
      SyntheticPatternSpec p = class_pattern(spec, c);
      p.velocity_px_per_ms *= 1.0 + spec.velocity_jitter * (2.0 * uniform01(rng) - 1.0);
      out.push_back(generate_synthetic(p, rng()));
    }
  }
  return out;
}

EventStream concatenate(std::span<const EventStream> parts, std::vector<StreamSpan>* spans) {
  EventStream out;
  if (spans) spans->clear();
  Microseconds offset = 0;
  for (const EventStream& s : parts) {
    if (out.geometry.empty()) out.geometry = s.geometry;
    if (s.geometry != out.geometry) throw GeometryError("cannot concatenate streams of different geometry");
    for (Event e : s.events) {
      e.t += offset;
      out.events.push_back(e);
    }
    if (spans) spans->push_back({offset, offset + s.duration, s.label.value_or(-1)});
    offset += s.duration;
  }
  out.duration = offset;
  return out;
}

}  // namespace spikestream::events
