#include "spikestream/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spikestream/errors.hpp"

namespace spikestream::events {
namespace {

constexpr std::string_view kMagic = "AER1";
constexpr std::size_t kPackedRecord = 13;
constexpr std::size_t kNmnistRecord = 5;

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Splits one line into whitespace-separated tokens, remembering byte offsets.
struct Token {
  std::string_view text;
  std::size_t offset;
};

std::vector<Token> tokenize(std::string_view line, std::size_t base) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t start = i;
    while (i < line.size() && !is_space(line[i])) ++i;
    if (i > start) out.push_back({line.substr(start, i - start), base + start});
  }
  return out;
}

template <typename T>
T parse_number(const Token& tok, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
  if (ec != std::errc() || ptr != tok.text.data() + tok.text.size())
    throw ParseError(std::string("malformed ") + what + " '" + std::string(tok.text) + "'", tok.offset);
  return value;
}

struct Header {
  Geometry geometry;
  Microseconds duration = 0;
  std::optional<int> label;
};

// Reads the header line; returns the offset just past its newline.
std::size_t parse_header(std::string_view bytes, Header& header) {
  std::size_t nl = bytes.find('\n');
  std::string_view line = bytes.substr(0, nl == std::string_view::npos ? bytes.size() : nl);
  auto toks = tokenize(line, 0);
  if (toks.size() < 4 || toks.size() > 5 || toks[0].text != kMagic)
    throw ParseError("expected header 'AER1 N M duration [label]'", 0);
  header.geometry.width = parse_number<int>(toks[1], "width");
  header.geometry.height = parse_number<int>(toks[2], "height");
  header.duration = parse_number<Microseconds>(toks[3], "duration");
  if (header.geometry.width < 0 || header.geometry.height < 0 || header.geometry.width > 65535 ||
      header.geometry.height > 65535)
    throw GeometryError("header geometry must be non-negative and fit 16 bits");
  if (header.duration < 0) throw ParseError("negative duration", toks[3].offset);
  if (toks.size() == 5) header.label = parse_number<int>(toks[4], "label");
  return nl == std::string_view::npos ? bytes.size() : nl + 1;
}

void check_event(const Event& e, const Geometry& g, std::size_t offset) {
  if (!g.contains(e.x, e.y))
    throw GeometryError("event address (" + std::to_string(e.x) + ", " + std::to_string(e.y) +
                        ") outside " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                        " at byte " + std::to_string(offset));
}

void finish(EventStream& s, Ordering ordering, const std::vector<std::size_t>& offsets) {
  for (std::size_t i = 1; i < s.events.size(); ++i) {
    if (s.events[i].t < s.events[i - 1].t) {
      if (ordering == Ordering::Strict)
        throw OrderingError("timestamp regression at byte " + std::to_string(offsets[i]));
      std::stable_sort(s.events.begin(), s.events.end(),
                       [](const Event& a, const Event& b) { return a.t < b.t; });
      break;
    }
  }
  if (!s.events.empty()) s.duration = std::max(s.duration, s.events.back().t);
}

EventStream parse_text(std::string_view bytes, const ParseOptions& options) {
  EventStream s;
  if (bytes.empty()) return s;
  Header h;
  std::size_t pos = parse_header(bytes, h);
  s.geometry = h.geometry;
  s.duration = h.duration;
  s.label = h.label;
  std::vector<std::size_t> offsets;
  while (pos < bytes.size()) {
    std::size_t nl = bytes.find('\n', pos);
    std::size_t end = nl == std::string_view::npos ? bytes.size() : nl;
    auto toks = tokenize(bytes.substr(pos, end - pos), pos);
    if (!toks.empty()) {
      if (toks.size() != 4) throw ParseError("expected 'x y t p'", pos);
      Event e;
      int x = parse_number<int>(toks[0], "x");
      int y = parse_number<int>(toks[1], "y");
      e.t = parse_number<Microseconds>(toks[2], "timestamp");
      int p = parse_number<int>(toks[3], "polarity");
      if (p != 1 && p != -1) throw ParseError("polarity must be -1 or 1", toks[3].offset);
      if (e.t < 0) throw ParseError("negative timestamp", toks[2].offset);
      if (x < 1 || y < 1 || x > 65535 || y > 65535) x = y = 0;
      e.x = static_cast<std::uint16_t>(x);
      e.y = static_cast<std::uint16_t>(y);
      e.p = static_cast<Polarity>(p);
      check_event(e, s.geometry, pos);
      s.events.push_back(e);
      offsets.push_back(pos);
    }
    pos = end + 1;
  }
  finish(s, options.ordering, offsets);
  return s;
}

template <typename T>
T load_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(p[i]) << (8 * i));
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  using U = std::make_unsigned_t<T>;
  U u = static_cast<U>(v);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}

EventStream parse_packed(std::string_view bytes, const ParseOptions& options) {
  EventStream s;
  if (bytes.empty()) return s;
  Header h;
  std::size_t pos = parse_header(bytes, h);
  s.geometry = h.geometry;
  s.duration = h.duration;
  s.label = h.label;
  std::size_t body = bytes.size() - pos;
  if (body % kPackedRecord != 0)
    throw ParseError("truncated packed record", pos + (body / kPackedRecord) * kPackedRecord);
  std::vector<std::size_t> offsets;
  s.events.reserve(body / kPackedRecord);
  offsets.reserve(body / kPackedRecord);
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (; pos < bytes.size(); pos += kPackedRecord) {
    const unsigned char* r = raw + pos;
    Event e;
    e.x = load_le<std::uint16_t>(r);
    e.y = load_le<std::uint16_t>(r + 2);
    std::uint64_t t = load_le<std::uint64_t>(r + 4);
    auto p = static_cast<std::int8_t>(r[12]);
    if (t > static_cast<std::uint64_t>(INT64_MAX)) throw ParseError("timestamp overflow", pos + 4);
    if (p != 1 && p != -1) throw ParseError("polarity must be -1 or 1", pos + 12);
    e.t = static_cast<Microseconds>(t);
    e.p = static_cast<Polarity>(p);
    check_event(e, s.geometry, pos);
    s.events.push_back(e);
    offsets.push_back(pos);
  }
  finish(s, options.ordering, offsets);
  return s;
}

EventStream parse_nmnist(std::string_view bytes, const ParseOptions& options) {
  EventStream s;
  s.geometry = options.geometry;
  if (bytes.size() % kNmnistRecord != 0)
    throw ParseError("truncated N-MNIST record", (bytes.size() / kNmnistRecord) * kNmnistRecord);
  std::vector<std::size_t> offsets;
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  for (std::size_t pos = 0; pos < bytes.size(); pos += kNmnistRecord) {
    const unsigned char* r = raw + pos;
    Event e;
    e.x = static_cast<std::uint16_t>(r[0] + 1);
    e.y = static_cast<std::uint16_t>(r[1] + 1);
    e.p = (r[2] & 0x80) ? Polarity::On : Polarity::Off;
    e.t = (static_cast<Microseconds>(r[2] & 0x7F) << 16) | (static_cast<Microseconds>(r[3]) << 8) | r[4];
    check_event(e, s.geometry, pos);
    s.events.push_back(e);
    offsets.push_back(pos);
  }
  finish(s, options.ordering, offsets);
  return s;
}

std::string header_line(const EventStream& s) {
  std::ostringstream os;
  os << kMagic << ' ' << s.geometry.width << ' ' << s.geometry.height << ' ' << s.duration;
  if (s.label) os << ' ' << *s.label;
  os << '\n';
  return os.str();
}

}  // namespace

StreamFormat format_from_name(std::string_view name) {
  if (name == "text") return StreamFormat::Text;
  if (name == "packed-binary" || name == "binary") return StreamFormat::PackedBinary;
  if (name == "nmnist-bin" || name == "nmnist") return StreamFormat::NmnistBin;
  throw ParameterError("unknown stream format '" + std::string(name) + "'");
}

std::string_view format_name(StreamFormat format) {
  switch (format) {
    case StreamFormat::Text: return "text";
    case StreamFormat::PackedBinary: return "packed-binary";
    case StreamFormat::NmnistBin: return "nmnist-bin";
  }
  return "text";
}

StreamFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".aerb") return StreamFormat::PackedBinary;
  if (ext == ".bin") return StreamFormat::NmnistBin;
  return StreamFormat::Text;
}

EventStream parse_stream(std::string_view bytes, StreamFormat format, const ParseOptions& options) {
  switch (format) {
    case StreamFormat::Text: return parse_text(bytes, options);
    case StreamFormat::PackedBinary: return parse_packed(bytes, options);
    case StreamFormat::NmnistBin: return parse_nmnist(bytes, options);
  }
  throw ParameterError("unknown stream format");
}

std::string serialize_stream(const EventStream& stream, StreamFormat format) {
  stream.validate();
  std::string out = header_line(stream);
  switch (format) {
    case StreamFormat::Text: {
      std::ostringstream os;
      for (const Event& e : stream.events)
        os << e.x << ' ' << e.y << ' ' << e.t << ' ' << static_cast<int>(e.p) << '\n';
      out += os.str();
      return out;
    }
    case StreamFormat::PackedBinary:
      out.reserve(out.size() + stream.events.size() * kPackedRecord);
      for (const Event& e : stream.events) {
        store_le<std::uint16_t>(out, e.x);
        store_le<std::uint16_t>(out, e.y);
        store_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.t));
        store_le<std::int8_t>(out, static_cast<std::int8_t>(e.p));
      }
      return out;
    case StreamFormat::NmnistBin:
      throw CapabilityError("nmnist-bin is a read-only format");
  }
  throw ParameterError("unknown stream format");
}

EventStream read_stream_file(const std::filesystem::path& path, StreamFormat format,
                             const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open stream file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_stream(bytes, format, options);
}

void write_stream_file(const std::filesystem::path& path, const EventStream& stream, StreamFormat format) {
  std::string bytes = serialize_stream(stream, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write stream file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace spikestream::events
