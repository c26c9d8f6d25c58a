#include <gtest/gtest.h>

#include <random>

#include "spikestream/errors.hpp"
#include "spikestream/event_io.hpp"

using namespace spikestream;
using namespace spikestream::events;

namespace {

EventStream random_stream(std::mt19937_64& rng, std::size_t n) {
  EventStream s;
  s.geometry = {128, 96};
  std::uniform_int_distribution<int> xd(1, 128), yd(1, 96), pd(0, 1);
  std::uniform_int_distribution<Microseconds> gap(0, 2000);
  Microseconds t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    s.events.push_back({static_cast<std::uint16_t>(xd(rng)), static_cast<std::uint16_t>(yd(rng)), t,
                        pd(rng) ? Polarity::On : Polarity::Off});
  }
  s.duration = t + 17;
  return s;
}

}  // namespace

TEST(TextFormat, ParsesSingleEventLine) {
  auto s = parse_stream("AER1 128 128 2000\n12 34 1500 1\n", StreamFormat::Text);
  ASSERT_EQ(s.events.size(), 1u);
  EXPECT_EQ(s.events[0], (Event{12, 34, 1500, Polarity::On}));
  EXPECT_EQ(s.geometry, (Geometry{128, 128}));
  EXPECT_EQ(s.duration, 2000);
  EXPECT_FALSE(s.label.has_value());
}

TEST(TextFormat, EmptyInputIsEmptyStream) {
  auto s = parse_stream("", StreamFormat::Text);
  EXPECT_TRUE(s.events.empty());
  EXPECT_EQ(s.duration, 0);
  auto b = parse_stream("", StreamFormat::PackedBinary);
  EXPECT_TRUE(b.events.empty());
  EXPECT_EQ(b.duration, 0);
}

TEST(TextFormat, EmptyStreamSerializesToHeaderOnly) {
  EventStream s;
  s.geometry = {34, 34};
  const auto text = serialize_stream(s, StreamFormat::Text);
  EXPECT_EQ(text, "AER1 34 34 0\n");
  EXPECT_EQ(parse_stream(text, StreamFormat::Text), s);
}

TEST(TextFormat, ThreeEventsGiveThreeLinesInOrder) {
  EventStream s;
  s.geometry = {10, 10};
  s.events = {{1, 2, 5, Polarity::On}, {3, 4, 5, Polarity::Off}, {10, 10, 9, Polarity::On}};
  s.duration = 9;
  const auto text = serialize_stream(s, StreamFormat::Text);
  EXPECT_EQ(text, "AER1 10 10 9\n1 2 5 1\n3 4 5 -1\n10 10 9 1\n");
}

TEST(TextFormat, LabelTokenRoundTrips) {
  EventStream s;
  s.geometry = {4, 4};
  s.events = {{2, 2, 3, Polarity::On}};
  s.duration = 10;
  s.label = 3;
  EXPECT_EQ(parse_stream(serialize_stream(s, StreamFormat::Text), StreamFormat::Text), s);
  EXPECT_EQ(parse_stream(serialize_stream(s, StreamFormat::PackedBinary), StreamFormat::PackedBinary), s);
}

TEST(PackedBinary, SingleRecordReserializesIdentically) {
  EventStream s;
  s.geometry = {128, 128};
  s.events = {{12, 34, 1500, Polarity::On}};
  s.duration = 1500;
  const auto bytes = serialize_stream(s, StreamFormat::PackedBinary);
  const std::string header = "AER1 128 128 1500\n";
  ASSERT_EQ(bytes.size(), header.size() + 13);
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  // u16 x, u16 y, u64 t, i8 p, little-endian
  const unsigned char expect[13] = {12, 0, 34, 0, 0xDC, 0x05, 0, 0, 0, 0, 0, 0, 1};
  EXPECT_EQ(bytes.substr(header.size()), std::string(reinterpret_cast<const char*>(expect), 13));
  const auto parsed = parse_stream(bytes, StreamFormat::PackedBinary);
  EXPECT_EQ(parsed, s);
  EXPECT_EQ(serialize_stream(parsed, StreamFormat::PackedBinary), bytes);
}

TEST(RoundTrip, RandomThousandEventStreams) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto s = random_stream(rng, 1000);
    for (auto f : {StreamFormat::Text, StreamFormat::PackedBinary}) {
      const auto back = parse_stream(serialize_stream(s, f), f);
      EXPECT_EQ(back, s) << format_name(f);
    }
  }
}

TEST(Errors, MalformedRecordReportsByteOffset) {
  const std::string text = "AER1 8 8 100\n1 1 5 1\n2 2 x 1\n";
  try {
    parse_stream(text, StreamFormat::Text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), text.find('x'));
  }
  // Truncated packed record.
  EventStream s;
  s.geometry = {8, 8};
  s.events = {{1, 1, 1, Polarity::On}};
  s.duration = 1;
  auto bytes = serialize_stream(s, StreamFormat::PackedBinary);
  bytes.pop_back();
  try {
    parse_stream(bytes, StreamFormat::PackedBinary);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), std::string("AER1 8 8 1\n").size());
  }
}

TEST(Errors, BadPolarityIsParseError) {
  EXPECT_THROW(parse_stream("AER1 8 8 100\n1 1 5 0\n", StreamFormat::Text), ParseError);
}

TEST(Errors, OutOfRangeAddressIsGeometryError) {
  EXPECT_THROW(parse_stream("AER1 8 8 100\n9 1 5 1\n", StreamFormat::Text), GeometryError);
  EXPECT_THROW(parse_stream("AER1 8 8 100\n0 1 5 1\n", StreamFormat::Text), GeometryError);
  EXPECT_THROW(parse_stream("AER1 8 8 100\n1 9 5 1\n", StreamFormat::Text), GeometryError);
}

TEST(Ordering, StrictRejectsLenientSortsStably) {
  const std::string text = "AER1 8 8 100\n1 1 50 1\n2 2 10 1\n3 3 10 -1\n";
  EXPECT_THROW(parse_stream(text, StreamFormat::Text), OrderingError);
  ParseOptions lenient;
  lenient.ordering = Ordering::Lenient;
  auto s = parse_stream(text, StreamFormat::Text, lenient);
  ASSERT_EQ(s.events.size(), 3u);
  EXPECT_EQ(s.events[0], (Event{2, 2, 10, Polarity::On}));
  EXPECT_EQ(s.events[1], (Event{3, 3, 10, Polarity::Off}));
  EXPECT_EQ(s.events[2], (Event{1, 1, 50, Polarity::On}));
}

TEST(Ordering, DurationCoversLastEvent) {
  auto s = parse_stream("AER1 8 8 10\n1 1 50 1\n", StreamFormat::Text);
  EXPECT_GE(s.duration, s.events.back().t);
}

TEST(NmnistBin, DecodesFortyBitRecords) {
  // x=3, y=7, p=1, t=0x12345 ; x=33, y=0, p=0, t=0x7FFFFF
  const unsigned char raw[10] = {3, 7, 0x80 | 0x01, 0x23, 0x45, 33, 0, 0x7F, 0xFF, 0xFF};
  auto s = parse_stream(std::string(reinterpret_cast<const char*>(raw), 10), StreamFormat::NmnistBin);
  ASSERT_EQ(s.events.size(), 2u);
  EXPECT_EQ(s.events[0], (Event{4, 8, 0x12345, Polarity::On}));
  EXPECT_EQ(s.events[1], (Event{34, 1, 0x7FFFFF, Polarity::Off}));
  EXPECT_EQ(s.geometry, (Geometry{34, 34}));
}

TEST(NmnistBin, PartialRecordAndSerializationFail) {
  const unsigned char raw[7] = {3, 7, 0x80, 0x23, 0x45, 1, 1};
  try {
    parse_stream(std::string(reinterpret_cast<const char*>(raw), 7), StreamFormat::NmnistBin);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 5u);
  }
  EventStream s;
  s.geometry = {34, 34};
  EXPECT_THROW(serialize_stream(s, StreamFormat::NmnistBin), CapabilityError);
}

TEST(Formats, NamesAndExtensions) {
  EXPECT_EQ(format_from_name("text"), StreamFormat::Text);
  EXPECT_EQ(format_from_name("packed-binary"), StreamFormat::PackedBinary);
  EXPECT_EQ(format_from_name("nmnist-bin"), StreamFormat::NmnistBin);
  EXPECT_THROW(format_from_name("aedat"), ParameterError);
  EXPECT_EQ(format_from_path("a/b.aerb"), StreamFormat::PackedBinary);
  EXPECT_EQ(format_from_path("a/b.bin"), StreamFormat::NmnistBin);
  EXPECT_EQ(format_from_path("a/b.aer"), StreamFormat::Text);
}

TEST(Truncate, KeepsEarlyEvents) {
  EventStream s;
  s.geometry = {4, 4};
  s.events = {{1, 1, 0, Polarity::On}, {1, 1, 99, Polarity::On}, {1, 1, 100, Polarity::On}};
  s.duration = 500;
  auto t = truncate(s, 100);
  EXPECT_EQ(t.events.size(), 2u);
  EXPECT_EQ(t.duration, 100);
  EXPECT_TRUE(truncate(s, 0).events.empty());
}
