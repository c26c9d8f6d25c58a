#include "spikestream/event.hpp"

#include <algorithm>
#include <string>

#include "spikestream/errors.hpp"

namespace spikestream::events {

void EventStream::validate() const {
  if (duration < 0) throw ParameterError("negative stream duration");
  Microseconds last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!geometry.contains(e.x, e.y))
      throw GeometryError("event " + std::to_string(i) + " at (" + std::to_string(e.x) + ", " +
                          std::to_string(e.y) + ") outside " + std::to_string(geometry.width) + "x" +
                          std::to_string(geometry.height));
    if (e.t < 0) throw OrderingError("negative timestamp at event " + std::to_string(i));
    if (e.t < last) throw OrderingError("timestamp regression at event " + std::to_string(i));
    if (e.p != Polarity::On && e.p != Polarity::Off)
      throw ParameterError("bad polarity at event " + std::to_string(i));
    last = e.t;
  }
  if (!events.empty() && duration < events.back().t)
    throw ParameterError("duration shorter than last event time");
}

EventStream truncate(const EventStream& stream, Microseconds limit) {
  EventStream out;
  out.geometry = stream.geometry;
  out.label = stream.label;
  out.duration = std::min(stream.duration, std::max<Microseconds>(limit, 0));
  auto end = std::lower_bound(stream.events.begin(), stream.events.end(), limit,
                              [](const Event& e, Microseconds t) { return e.t < t; });
  out.events.assign(stream.events.begin(), end);
  return out;
}

}  // namespace spikestream::events
