#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "spikestream/event.hpp"

namespace spikestream::events {

// text:          "AER1 N M duration [label]" header line, then one "x y t p" line per event.
// packed-binary: the same header line, then 13-byte little-endian records
//                (u16 x, u16 y, u64 t, i8 p).
// nmnist-bin:    headerless 40-bit big-endian records (x:8, y:8, p:1, t:23); read-only.
enum class StreamFormat { Text, PackedBinary, NmnistBin };

enum class Ordering { Strict, Lenient };

struct ParseOptions {
  Ordering ordering = Ordering::Strict;
  // Geometry for headerless formats (nmnist-bin); ignored when the header declares one.
  Geometry geometry{34, 34};
};

StreamFormat format_from_name(std::string_view name);
std::string_view format_name(StreamFormat format);
// Guess from a file extension: .aer text, .aerb packed-binary, .bin nmnist-bin.
StreamFormat format_from_path(const std::filesystem::path& path);

EventStream parse_stream(std::string_view bytes, StreamFormat format, const ParseOptions& options = {});
std::string serialize_stream(const EventStream& stream, StreamFormat format);

EventStream read_stream_file(const std::filesystem::path& path, StreamFormat format,
                             const ParseOptions& options = {});
void write_stream_file(const std::filesystem::path& path, const EventStream& stream, StreamFormat format);

}  // namespace spikestream::events
