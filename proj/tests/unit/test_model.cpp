#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "spikestream/errors.hpp"
#include "spikestream/model.hpp"

using namespace spikestream;

TEST(Weights, EncodeDecodeRoundTrip) {
  WeightMatrix w(3, 2, 5);
  for (std::size_t i = 0; i < w.data().size(); ++i) w.data()[i] = 0.125 * static_cast<double>(i) - 1.0 / 3.0;
  const auto bytes = encode_weights(w, {kWeightsVersion, 8.0, 12.5});
  EXPECT_EQ(bytes.substr(0, 4), "SPKW");
  EXPECT_EQ(bytes.size(), 4 + 4 * 4 + 16 + 8 * w.data().size());
  WeightsHeader h;
  auto back = decode_weights(bytes, &h);
  EXPECT_EQ(back, w);
  EXPECT_EQ(h.tau_m_ms, 8.0);
  EXPECT_EQ(h.search_range_ms, 12.5);
  EXPECT_EQ(back.neurons(), 6);
  EXPECT_EQ(w.at(1, 3), w.row(1)[3]);
}

TEST(Weights, RejectsCorruptFiles) {
  WeightMatrix w(2, 1, 3, 0.5);
  auto bytes = encode_weights(w, {kWeightsVersion, 8.0, 8.0});
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_weights(bad), ParseError);
  EXPECT_THROW(decode_weights(bytes.substr(0, bytes.size() - 1)), ParseError);
  bad = bytes;
  bad[4] = 9;  // version
  EXPECT_THROW(decode_weights(bad), ParseError);
}

TEST(Weights, FileAndSidecar) {
  const auto dir = std::filesystem::temp_directory_path() / "spikestream_model_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "w.spkw";
  WeightMatrix w(2, 2, 4, -0.25);
  write_weights(path, w, {kWeightsVersion, 80.0, 80.0}, "{\"k\": 1}\n");
  EXPECT_EQ(read_weights(path), w);
  EXPECT_EQ(sidecar_path(path), dir / "w.spkw.json");
  std::ifstream meta(sidecar_path(path));
  std::string line;
  std::getline(meta, line);
  EXPECT_EQ(line, "{\"k\": 1}");
  EXPECT_THROW(read_weights(dir / "missing.spkw"), Error);
  std::filesystem::remove_all(dir);
}
