#pragma once

#include <cstdint>
#include <optional>
#include <vector>

namespace spikestream::events {

// Timestamps are integer microseconds throughout the event layer.
using Microseconds = std::int64_t;

inline constexpr double to_ms(Microseconds t) { return static_cast<double>(t) / 1000.0; }

enum class Polarity : std::int8_t { Off = -1, On = 1 };

// Sensor dimensions; pixel addresses are 1-based, x in [1, width], y in [1, height].
struct Geometry {
  int width = 0;
  int height = 0;

  bool contains(int x, int y) const { return x >= 1 && x <= width && y >= 1 && y <= height; }
  bool empty() const { return width <= 0 || height <= 0; }
  friend bool operator==(const Geometry&, const Geometry&) = default;
};

struct Event {
  std::uint16_t x = 1;
  std::uint16_t y = 1;
  Microseconds t = 0;
  Polarity p = Polarity::On;

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  Geometry geometry;
  std::vector<Event> events;
  std::optional<int> label;
  Microseconds duration = 0;

  // Throws GeometryError / OrderingError / ParameterError on a broken invariant.
  void validate() const;
  friend bool operator==(const EventStream&, const EventStream&) = default;
};

// Keeps events with t < limit and clamps the duration.
EventStream truncate(const EventStream& stream, Microseconds limit);

}  // namespace spikestream::events
