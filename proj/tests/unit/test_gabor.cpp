#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spikestream/errors.hpp"
#include "spikestream/gabor.hpp"
#include "spikestream/synthetic.hpp"

using namespace spikestream;
using namespace spikestream::gabor;
using events::Event;
using events::Polarity;

namespace {

GaborBank default_bank() { return GaborBank::build(GaborParams{}); }

S1Config s1(double tau = 80.0) {
  S1Config c;
  c.tau_ms = tau;
  return c;
}

}  // namespace

TEST(GaborBank, CenterIsOneAndSizesMatch) {
  auto bank = default_bank();
  ASSERT_EQ(bank.scale_count(), 4);
  ASSERT_EQ(bank.orientation_count(), 4);
  for (int s = 0; s < 4; ++s)
    for (int o = 0; o < 4; ++o) {
      const auto& k = bank.kernel(s, o);
      EXPECT_EQ(k.at(0, 0), 1.0);
      EXPECT_EQ(k.side(), 3 + 2 * s);
      EXPECT_EQ(k.values().size(), static_cast<std::size_t>(k.side() * k.side()));
    }
}

TEST(GaborBank, ZeroDegreeKernelsMirrorInY) {
  auto bank = default_bank();
  for (int s = 0; s < 4; ++s) {
    const auto& k = bank.kernel(s, 0);
    for (int dy = -k.half_width(); dy <= k.half_width(); ++dy)
      for (int dx = -k.half_width(); dx <= k.half_width(); ++dx) EXPECT_DOUBLE_EQ(k.at(dx, dy), k.at(dx, -dy));
  }
}

TEST(GaborBank, ThreeByThreeMatchesScalarFormula) {
  const double gamma = 0.3, sigma = 1.2, lambda = 1.5;
  auto bank = default_bank();
  const auto& k = bank.kernel(0, 0);
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      // theta = 0: X = dx, Y = dy.
      const double expect =
          std::exp(-(dx * dx + gamma * gamma * dy * dy) / (2 * sigma * sigma)) * std::cos(2 * std::numbers::pi * dx / lambda);
      EXPECT_NEAR(k.at(dx, dy), expect, 1e-15) << dx << "," << dy;
    }
  EXPECT_NEAR(k.at(1, 0), std::exp(-1 / 2.88) * std::cos(4 * std::numbers::pi / 3), 1e-15);
}

TEST(GaborBank, RejectsBadParameters) {
  GaborParams p;
  p.scales[1].sigma = 0.0;
  EXPECT_THROW(GaborBank::build(p), ParameterError);
  p = {};
  p.scales[2].wavelength = -1.0;
  EXPECT_THROW(GaborBank::build(p), ParameterError);
  p = {};
  p.scales[0].size = 4;
  EXPECT_THROW(GaborBank::build(p), ParameterError);
  p = {};
  p.scales[0].size = 1;
  EXPECT_THROW(GaborBank::build(p), ParameterError);
}

TEST(GaborBank, ConfigTextListsScaleTable) {
  const auto text = to_config_text(GaborParams{});
  EXPECT_NE(text.find("sizes = 3, 5, 7, 9"), std::string::npos) << text;
  EXPECT_NE(text.find("orientations = 0, 45, 90, 135"), std::string::npos) << text;
}

TEST(S1, SingleEventGivesUnitVoltageAtCenter) {
  S1Layer layer(default_bank(), {16, 16}, s1());
  auto out = layer.process(Event{8, 8, 1000, Polarity::On});
  EXPECT_TRUE(out.empty());
  for (int m = 0; m < 16; ++m) EXPECT_DOUBLE_EQ(layer.voltage(m, 8, 8, 1000), 1.0);
}

TEST(S1, SingleEventDecaysByOneTimeConstant) {
  S1Layer layer(default_bank(), {16, 16}, s1(80.0));
  layer.process(Event{8, 8, 0, Polarity::On});
  EXPECT_NEAR(layer.voltage(0, 8, 8, 80000), std::exp(-1.0), 1e-12);
  EXPECT_NEAR(layer.voltage(5, 8, 8, 80000), 0.36788, 1e-5);
}

TEST(S1, CoLocatedEventsAndStrictThreshold) {
  // Two events reach at most 1 + e^{-dt/tau} < 2: the strict comparison does not fire.
  S1Layer layer(default_bank(), {16, 16}, s1());
  EXPECT_TRUE(layer.process(Event{7, 7, 0, Polarity::On}).empty());
  EXPECT_TRUE(layer.process(Event{7, 7, 10, Polarity::On}).empty());
  EXPECT_LT(layer.voltage(0, 7, 7, 10), 2.0);
  EXPECT_GT(layer.voltage(0, 7, 7, 10), 1.999);
  // A third identical event crosses: exactly one spike per map whose centre crosses.
  auto out = layer.process(Event{7, 7, 20, Polarity::On});
  ASSERT_FALSE(out.empty());
  std::vector<int> per_unit(16 * 8 * 8, 0);
  for (const auto& sp : out) {
    ++per_unit[(sp.map * 8 + sp.uy) * 8 + sp.ux];
    EXPECT_EQ(sp.t, 20);
    for (int y = 2 * sp.uy + 1; y <= 2 * sp.uy + 2; ++y)
      for (int x = 2 * sp.ux + 1; x <= 2 * sp.ux + 2; ++x) EXPECT_EQ(layer.voltage(sp.map, x, y, 20), 0.0);
  }
  for (int c : per_unit) EXPECT_LE(c, 1);
  // Pixel (7,7) lies in unit (3,3); every map's centre reads 3 - tiny > 2 before reset.
  for (int m = 0; m < 16; ++m) {
    int hits = 0;
    for (const auto& sp : out) hits += sp.map == m && sp.ux == 3 && sp.uy == 3;
    EXPECT_EQ(hits, 1) << "map " << m;
  }

  // Dense replay agrees spike-for-spike.
  oracle::DenseS1 dense(GaborParams{}, {16, 16}, 80.0, 2.0, 0.0);
  EXPECT_TRUE(dense.process(Event{7, 7, 0, Polarity::On}).empty());
  EXPECT_TRUE(dense.process(Event{7, 7, 10, Polarity::On}).empty());
  EXPECT_EQ(dense.process(Event{7, 7, 20, Polarity::On}), out);
}

TEST(S1, AddressAndOrderingErrors) {
  S1Layer layer(default_bank(), {8, 8}, s1());
  EXPECT_THROW(layer.process(Event{9, 1, 0, Polarity::On}), GeometryError);
  layer.process(Event{1, 1, 100, Polarity::On});
  EXPECT_THROW(layer.process(Event{1, 1, 99, Polarity::On}), OrderingError);
  EXPECT_NO_THROW(layer.process(Event{1, 1, 100, Polarity::Off}));
}

TEST(S1, OddGeometryHasPartialUnits) {
  auto bank = default_bank();
  auto layout = FeatureLayout::of(bank, {5, 3}, s1());
  EXPECT_EQ(layout.units_x, 3);
  EXPECT_EQ(layout.units_y, 2);
  EXPECT_EQ(layout.maps, 16);
  EXPECT_EQ(layout.afferent_count(), 96);
  EXPECT_EQ(layout.afferent(FeatureSpike{2, 1, 1, 0}), (2 * 2 + 1) * 3 + 1);
  // Border pixel (5,3) fires into the partial unit (2,1).
  S1Layer layer(bank, {5, 3}, s1());
  std::vector<FeatureSpike> out;
  for (int i = 0; i < 3; ++i) layer.process(Event{5, 3, i, Polarity::On}, out);
  bool found = false;
  for (const auto& sp : out) found |= sp.ux == 2 && sp.uy == 1;
  EXPECT_TRUE(found);
  auto split = s1();
  split.split_polarity = true;
  EXPECT_EQ(FeatureLayout::of(bank, {5, 3}, split).maps, 32);
}

TEST(S1, LazyDecayMatchesBruteForceSum) {
  std::mt19937_64 rng(21);
  const events::Geometry g{12, 10};
  for (int trial = 0; trial < 20; ++trial) {
    S1Layer layer(default_bank(), g, s1(5.0));
    oracle::BruteS1 brute(GaborParams{}, g, 5.0);
    std::uniform_int_distribution<int> xd(1, g.width), yd(1, g.height), gap(0, 800);
    std::int64_t t = 0;
    for (int i = 0; i < 150; ++i) {
      t += gap(rng);
      Event e{static_cast<std::uint16_t>(xd(rng)), static_cast<std::uint16_t>(yd(rng)), t, Polarity::On};
      auto fired = layer.process(e);
      brute.record(e, fired);
    }
    const std::int64_t tq = t + 300;
    for (int m = 0; m < 16; ++m)
      for (int y = 1; y <= g.height; ++y)
        for (int x = 1; x <= g.width; ++x) ASSERT_NEAR(layer.voltage(m, x, y, tq), brute.v(m, x, y, tq), 1e-9);
  }
}

TEST(S1, SubThresholdLinearity) {
  const events::Geometry g{10, 10};
  GaborParams p;
  std::vector<Event> evs;
  for (int i = 0; i < 12; ++i) evs.push_back({static_cast<std::uint16_t>(1 + (i * 3) % 10), static_cast<std::uint16_t>(1 + (i * 7) % 10), i * 50000, Polarity::On});
  oracle::DenseS1 base(p, g, 1.0, 2.0, 0.0), scaled(p, g, 1.0, 2.0, 0.0);
  for (auto& k : scaled.kernels)
    for (double& v : k) v *= 0.5;
  for (const auto& e : evs) {
    ASSERT_TRUE(base.process(e).empty());
    scaled.process(e);
  }
  S1Layer layer(GaborBank::build(p), g, s1(1.0));
  for (const auto& e : evs) ASSERT_TRUE(layer.process(e).empty());
  for (int m = 0; m < 16; ++m)
    for (int y = 1; y <= 10; ++y)
      for (int x = 1; x <= 10; ++x) {
        EXPECT_NEAR(scaled.v(m, x, y), 0.5 * base.v(m, x, y), 1e-12);
        EXPECT_NEAR(layer.voltage(m, x, y, evs.back().t), base.v(m, x, y), 1e-12);
      }
}

TEST(Extract, EmptyAndIsolatedEventsGiveNothing) {
  events::EventStream empty;
  empty.geometry = {8, 8};
  EXPECT_TRUE(extract_features(empty, default_bank(), s1()).empty());
  events::EventStream sparse;
  sparse.geometry = {8, 8};
  for (int i = 0; i < 20; ++i)
    sparse.events.push_back({static_cast<std::uint16_t>(1 + i % 8), static_cast<std::uint16_t>(1 + (i * 3) % 8),
                             static_cast<std::int64_t>(i) * 10'000'000, Polarity::On});
  sparse.duration = sparse.events.back().t;
  EXPECT_TRUE(extract_features(sparse, default_bank(), s1(80.0)).empty());
}

TEST(Extract, FoldOfProcessAndTimeOrdered) {
  events::SyntheticPatternSpec spec;
  spec.orientation_deg = 45.0;
  spec.duration = 15000;
  spec.noise_rate_per_ms = 3.0;
  auto stream = events::generate_synthetic(spec, 2);
  auto bank = default_bank();
  auto feats = extract_features(stream, bank, s1(8.0));
  S1Layer layer(bank, stream.geometry, s1(8.0));
  oracle::DenseS1 dense(GaborParams{}, stream.geometry, 8.0, 2.0, 0.0);
  std::vector<FeatureSpike> folded, replay;
  for (const auto& e : stream.events) {
    layer.process(e, folded);
    auto d = dense.process(e);
    replay.insert(replay.end(), d.begin(), d.end());
  }
  EXPECT_EQ(feats, folded);
  EXPECT_EQ(feats, replay);
  for (std::size_t i = 1; i < feats.size(); ++i) EXPECT_LE(feats[i - 1].t, feats[i].t);
}

TEST(Extract, ZeroDegreeBarPrefersZeroDegreeMaps) {
  events::SyntheticPatternSpec spec;
  spec.orientation_deg = 0.0;
  spec.duration = 30000;
  spec.velocity_px_per_ms = 1.5;
  spec.spacing_px = 16;
  auto stream = events::generate_synthetic(spec, 12);
  auto feats = extract_features(stream, default_bank(), s1(8.0));
  std::size_t zero = 0, ninety = 0;
  for (const auto& f : feats) {
    zero += f.map % 4 == 0;
    ninety += f.map % 4 == 2;
  }
  EXPECT_GT(zero, ninety);
}

TEST(Extract, FeatureTextUsesUnitGrid) {
  std::vector<FeatureSpike> s{{3, 0, 1, 40}};
  FeatureLayout layout{16, 4, 3};
  EXPECT_EQ(feature_spikes_to_text(s, layout, 100), "AER1 4 3 100\n1 2 40 3\n");
}
