#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "spikestream/event.hpp"

namespace spikestream::events {

enum class PatternKind { Bar, FilledSquare, HollowSquare };

// A stimulus drifting along the unit normal (cos θ, sin θ) in pixel coordinates.
// The pattern repeats with period `spacing_px` along that normal, so a single bar
// re-enters the sensor after leaving it. Orientation follows the Gabor convention:
// a 0° bar is a column of constant x and excites the 0° filters.
struct SyntheticPatternSpec {
  PatternKind kind = PatternKind::Bar;
  double orientation_deg = 0.0;
  double velocity_px_per_ms = 1.0;
  double noise_rate_per_ms = 0.0;
  Geometry geometry{32, 32};
  Microseconds duration = 0;

  double bar_width_px = 2.0;
  double shape_size_px = 10.0;
  // 0 selects one pattern per sensor crossing.
  double spacing_px = 0.0;
  // Uniform jitter in [-j, j] added to every pattern event.
  double timing_jitter_us = 0.0;
  // Unset values are drawn from the seed.
  std::optional<double> phase_px;
  std::optional<bool> reverse;
  std::optional<double> lateral_offset_px;
  std::optional<int> label;

  void validate() const;
};

// Period of the stimulus along its drift direction.
double pattern_period(const SyntheticPatternSpec& spec);

EventStream generate_synthetic(const SyntheticPatternSpec& spec, std::uint64_t seed);

// Class c of a labeled synthetic dataset: 0..3 bars at 0/45/90/135 degrees,
// 4 a filled square, 5 a hollow square.
inline constexpr int kMaxSyntheticClasses = 6;

struct DatasetSpec {
  int classes = 4;
  int per_class = 20;
  Geometry geometry{32, 32};
  Microseconds duration = 30000;
  double velocity_px_per_ms = 1.5;
  double velocity_jitter = 0.2;  // relative, uniform
  double noise_rate_per_ms = 10.0;
  double bar_width_px = 2.0;
  double spacing_px = 16.0;
  double timing_jitter_us = 100.0;
};

SyntheticPatternSpec class_pattern(const DatasetSpec& spec, int label);

// Class-major order: all samples of class 0 first. Each sample uses its own
// seed derived from (seed, label, index).
std::vector<EventStream> generate_dataset(const DatasetSpec& spec, std::uint64_t seed);

struct StreamSpan {
  Microseconds begin = 0;
  Microseconds end = 0;
  int label = -1;
};

// Appends streams on one time axis; each stream is offset by the summed durations before it.
EventStream concatenate(std::span<const EventStream> parts, std::vector<StreamSpan>* spans = nullptr);

}  // namespace spikestream::events
