#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "spikestream/config.hpp"
#include "spikestream/errors.hpp"
#include "spikestream/pipeline.hpp"
#include "spikestream/readout.hpp"
#include "spikestream/synthetic.hpp"

using namespace spikestream;
using namespace spikestream::readout;
using snn::AfferentSpike;
using snn::PspKernel;

namespace {

struct Trained {
  config::RunConfig cfg;
  gabor::GaborBank bank;
  WeightMatrix weights;
  std::vector<events::EventStream> train;
};

// Two bar orientations, trained once and shared by the end-to-end checks below.
const Trained& trained() {
  static const Trained t = [] {
    auto cfg = config::preset("cards");
    cfg.spa.classes = 2;
    cfg.spa.iterations = 10;
    events::DatasetSpec ds;
    ds.classes = 4;
    ds.per_class = 8;
    auto all = events::generate_dataset(ds, 31);
    std::vector<events::EventStream> two;
    for (auto& s : all)
      if (*s.label == 0 || *s.label == 2) {
        s.label = *s.label / 2;
        two.push_back(s);
      }
    auto bank = gabor::GaborBank::build(cfg.gabor);
    auto feats = featurize_all(two, bank, cfg.s1_config());
    auto layout = gabor::FeatureLayout::of(bank, ds.geometry, cfg.s1_config());
    auto result = spa::spa_train(feats, layout.afferent_count(), cfg.kernel(), cfg.spa);
    return Trained{cfg, bank, result.weights, two};
  }();
  return t;
}

}  // namespace

TEST(Argmax, LowestIndexWinsTies) {
  EXPECT_EQ(argmax({0.0, 0.0, 0.0}), 0);
  EXPECT_EQ(argmax({1.0, 3.0, 3.0}), 1);
  EXPECT_EQ(argmax({-1.0, -2.0}), 0);
}

TEST(ClassRates, PopulationAverage) {
  auto r = class_rates({3, 1, 1, 1}, 2, 2);
  EXPECT_EQ(r, (std::vector<double>{2.0, 1.0}));
  EXPECT_EQ(argmax(r), 0);
  EXPECT_THROW(class_rates({1, 2, 3}, 2, 2), ShapeError);
}

TEST(ClassRates, ArgmaxInvariantToPositiveScaling) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> counts(12);
    for (double& c : counts) c = static_cast<double>(rng() % 6);
    auto scaled = counts;
    // Powers of two keep ties exact.
    const double a = std::ldexp(1.0, static_cast<int>(rng() % 20) - 5);
    for (double& c : scaled) c *= a;
    EXPECT_EQ(argmax(class_rates(counts, 4, 3)), argmax(class_rates(scaled, 4, 3)));
  }
}

TEST(Classify, ZeroWeightsGiveClassZero) {
  WeightMatrix w(3, 2, 10, 0.0);
  std::vector<AfferentSpike> f{{1.0, 2}, {2.0, 5}, {3.5, 9}};
  auto d = classify(f, 10.0, w, PspKernel(8.0), {});
  EXPECT_EQ(d.predicted, 0);
  EXPECT_EQ(d.class_rates, (std::vector<double>{0, 0, 0}));
}

TEST(Classify, HandBuiltSingleCrossing) {
  WeightMatrix w(2, 3, 4, 0.0);
  for (int n = 0; n < 3; ++n) w.at(3 + n, 1) = 2.0;  // class 1 neurons
  std::vector<AfferentSpike> f{{1.0, 1}};
  PspKernel k(8.0);
  auto d = classify(f, 30.0, w, k, {});
  EXPECT_EQ(d.predicted, 1);
  EXPECT_EQ(d.class_rates, (std::vector<double>{0.0, 1.0}));
  // The reset drops the PSP, so each class-1 neuron fires exactly once.
  DecisionLayer layer(w, k, 1.0, 0.0);
  layer.advance_to(1.0);
  layer.deliver(1);
  layer.advance_to(30.0);
  for (int n = 0; n < 3; ++n) {
    ASSERT_EQ(layer.output_spikes()[3 + n].size(), 1u);
    EXPECT_NEAR(2.0 * k(layer.output_spikes()[3 + n][0] - 1.0), 1.0, 1e-9);
    EXPECT_EQ(layer.voltage(3 + n), 0.0);
  }
}

TEST(Classify, DimensionMismatchIsShapeError) {
  WeightMatrix w(2, 1, 4, 0.1);
  std::vector<AfferentSpike> f{{1.0, 7}};
  EXPECT_THROW(classify(f, 5.0, w, PspKernel(8.0), {}), ShapeError);
}

TEST(DecisionLayerTest, MatchesResetOracleAndResetsToVReset) {
  std::mt19937_64 rng(14);
  PspKernel k(6.0);
  WeightMatrix w(2, 2, 5);
  for (double& x : w.data()) x = std::uniform_real_distribution<double>(-0.2, 0.9)(rng);
  std::vector<double> ts(30);
  for (double& t : ts) t = std::round(std::uniform_real_distribution<double>(0.0, 25.0)(rng) * 1000) / 1000;
  std::sort(ts.begin(), ts.end());
  std::vector<AfferentSpike> f;
  for (double t : ts) f.push_back({t, static_cast<std::uint32_t>(rng() % 5)});
  DecisionLayer layer(w, k, 1.0, 0.0);
  for (const auto& s : f) {
    layer.advance_to(s.t);
    layer.deliver(s.afferent);
  }
  layer.advance_to(30.0);
  std::size_t total = 0;
  for (int j = 0; j < 4; ++j) {
    const auto row = w.row(j);
    std::vector<double> wr(row.begin(), row.end());
    auto ref = oracle::reset_spikes(6.0, 1.5, wr, f, 1.0, 0.0, 30.0, 1e-3);
    ASSERT_EQ(layer.output_spikes()[j].size(), ref.size()) << j;
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(layer.output_spikes()[j][i], ref[i], 1e-9);
    auto lib = snn::evaluate_voltage_with_reset(k, row, f, 30.0, {});
    EXPECT_EQ(lib.output_spikes.size(), ref.size());
    for (double t : lib.output_spikes) EXPECT_NEAR(snn::evaluate_voltage_with_reset(k, row, f, t, {}).voltage, 0.0, 1e-12);
    total += ref.size();
  }
  EXPECT_GT(total, 0u);
}

TEST(DecisionLayerTest, NoInputsNoSpikes) {
  WeightMatrix w(2, 2, 3, 5.0);
  DecisionLayer layer(w, PspKernel(8.0), 1.0, 0.0);
  layer.advance_to(100.0);
  for (double c : layer.total_counts()) EXPECT_EQ(c, 0.0);
  EXPECT_THROW(layer.advance_to(50.0), OrderingError);
}

TEST(DecisionLayerTest, WindowCountsAreHalfOpen) {
  WeightMatrix w(1, 1, 1, 2.0);
  PspKernel k(1.0);
  DecisionLayer layer(w, k, 1.0, 0.0);
  layer.deliver(0);
  layer.advance_to(10.0);
  ASSERT_EQ(layer.output_spikes()[0].size(), 1u);
  const double t = layer.output_spikes()[0][0];
  EXPECT_EQ(layer.counts_in_window(t, 1.0)[0], 1.0);
  EXPECT_EQ(layer.counts_in_window(t + 1.0, 1.0)[0], 0.0);
  EXPECT_EQ(layer.counts_in_window(t - 1e-9, 1.0)[0], 0.0);
}

TEST(Stream, EmptyStreamGivesNoDecisions) {
  const auto& t = trained();
  events::EventStream empty;
  EXPECT_TRUE(classify_stream(empty, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference, 8.0).empty());
}

TEST(Stream, DecisionsEveryPeriod) {
  const auto& t = trained();
  auto d = classify_stream(t.train[0], t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference, 8.0);
  ASSERT_EQ(d.size(), 6u);  // 30 ms / 5 ms
  for (std::size_t i = 0; i < d.size(); ++i) EXPECT_DOUBLE_EQ(d[i].time_ms, 5.0 * (i + 1));
}

TEST(Stream, ShapeMismatchIsRejected) {
  const auto& t = trained();
  events::EventStream s;
  s.geometry = {20, 20};
  s.duration = 10000;
  s.events = {{1, 1, 0, events::Polarity::On}};
  EXPECT_THROW(classify_stream(s, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference, 8.0), ShapeError);
}

TEST(Stream, FullWindowMatchesBatchClassify) {
  const auto& t = trained();
  auto inf = t.cfg.inference;
  for (const auto& s : t.train) {
    inf.period_ms = events::to_ms(s.duration);
    auto d = classify_stream(s, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), inf,
                             std::numeric_limits<double>::infinity());
    ASSERT_EQ(d.size(), 1u);
    auto f = featurize(s, t.bank, t.cfg.s1_config());
    auto b = classify(f.spikes, events::to_ms(s.duration), t.weights, t.cfg.kernel(), inf);
    EXPECT_EQ(d[0].predicted, b.predicted);
    EXPECT_EQ(d[0].class_rates, b.class_rates);
  }
}

TEST(Stream, SingleClassStreamStaysOnClass) {
  const auto& t = trained();
  events::DatasetSpec ds;
  ds.per_class = 2;
  auto fresh = events::generate_dataset(ds, 77);
  for (const auto& s : fresh) {
    if (*s.label != 0 && *s.label != 2) continue;
    const int label = *s.label / 2;
    auto f = featurize(s, t.bank, t.cfg.s1_config());
    if (classify(f.spikes, events::to_ms(s.duration), t.weights, t.cfg.kernel(), t.cfg.inference).predicted != label)
      continue;
    auto d = classify_stream(s, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference,
                             t.cfg.stream_window_ms());
    for (const auto& x : d)
      if (x.time_ms >= t.cfg.stream_window_ms()) EXPECT_EQ(x.predicted, label) << x.time_ms;
  }
}

TEST(Stream, ConcatenatedStreamSwitchesClass) {
  const auto& t = trained();
  events::DatasetSpec ds;
  ds.per_class = 2;
  auto fresh = events::generate_dataset(ds, 91);
  std::vector<events::EventStream> parts;
  for (int i = 0; i < 2; ++i)
    for (int c : {0, 2}) {
      auto s = fresh[static_cast<std::size_t>(c * 2 + i)];
      s.label = c / 2;
      parts.push_back(s);
    }
  std::vector<events::StreamSpan> spans;
  auto joined = events::concatenate(parts, &spans);
  auto d = classify_stream(joined, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference,
                           t.cfg.stream_window_ms());
  for (std::size_t k = 1; k < spans.size(); ++k) {
    const double begin = events::to_ms(spans[k].begin), end = events::to_ms(spans[k].end);
    auto st = stabilization_time(d, spans[k].label, begin, end + 1e-9);
    ASSERT_TRUE(st.has_value()) << "span " << k;
    EXPECT_LE(*st - begin, 15.0) << "span " << k;
  }
}

TEST(Stabilization, EarliestPointOfLastCorrectRun) {
  std::vector<Decision> d;
  for (int i = 1; i <= 6; ++i) d.push_back({i == 3 || i >= 5 ? 1 : 0, {}, 5.0 * i});
  EXPECT_EQ(stabilization_time(d, 1), 25.0);
  EXPECT_EQ(stabilization_time(d, 1, 0.0, 16.0), 15.0);
  EXPECT_FALSE(stabilization_time(d, 0).has_value());
}

TEST(Evaluate, TrainingSetIsMemorised) {
  const auto& t = trained();
  auto rep = evaluate(t.train, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference,
                      t.cfg.stream_window_ms());
  EXPECT_EQ(rep.accuracy, 1.0);
  EXPECT_EQ(rep.total, 16);
  EXPECT_EQ(rep.confusion[0][0] + rep.confusion[1][1], 16);
  EXPECT_TRUE(rep.mean_latency_ms.has_value());
}

TEST(Evaluate, SingleSampleMemorised) {
  auto cfg = config::preset("cards");
  cfg.spa.iterations = 15;
  events::DatasetSpec ds;
  ds.classes = 2;
  ds.per_class = 1;
  auto s = events::generate_dataset(ds, 5);
  auto bank = gabor::GaborBank::build(cfg.gabor);
  auto feats = featurize_all(s, bank, cfg.s1_config());
  auto layout = gabor::FeatureLayout::of(bank, ds.geometry, cfg.s1_config());
  auto w = spa::spa_train(feats, layout.afferent_count(), cfg.kernel(), cfg.spa).weights;
  std::vector<events::EventStream> one{s[1]};
  EvalOptions opt;
  opt.streaming_latency = false;
  auto rep = evaluate(one, bank, cfg.s1_config(), w, cfg.kernel(), cfg.inference, cfg.stream_window_ms(), opt);
  EXPECT_EQ(rep.accuracy, 1.0);
  EXPECT_FALSE(rep.per_class[0].accuracy.has_value());
  EXPECT_EQ(rep.per_class[0].support, 0);
  auto j = nlohmann::json::parse(rep.to_json());
  EXPECT_TRUE(j["per_class"][0]["accuracy"].is_null());
  EXPECT_EQ(j["per_class"][1]["accuracy"], 1.0);
  EXPECT_NE(rep.to_text().find("class 0: absent"), std::string::npos);
}

TEST(Evaluate, PermutedLabelsAreNearChance) {
  auto cfg = config::preset("cards");
  events::DatasetSpec ds;
  ds.per_class = 20;
  ds.duration = 10000;
  auto s = events::generate_dataset(ds, 13);
  std::vector<int> labels;
  for (const auto& x : s) labels.push_back(*x.label);
  std::mt19937 rng(4);
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < s.size(); ++i) s[i].label = labels[i];
  auto bank = gabor::GaborBank::build(cfg.gabor);
  cfg.spa.classes = 4;
  auto layout = gabor::FeatureLayout::of(bank, ds.geometry, cfg.s1_config());
  auto w = spa::initial_weights(cfg.spa, layout.afferent_count());
  EvalOptions opt;
  opt.streaming_latency = false;
  auto rep = evaluate(s, bank, cfg.s1_config(), w, cfg.kernel(), cfg.inference, cfg.stream_window_ms(), opt);
  const double sigma = std::sqrt(0.25 * 0.75 / 80.0);
  EXPECT_NEAR(rep.accuracy, 0.25, 3 * sigma);
}

TEST(Evaluate, Errors) {
  const auto& t = trained();
  EXPECT_THROW(evaluate({}, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference, 8.0), ParameterError);
  auto bad = t.train[0];
  bad.label = 7;
  EXPECT_THROW(evaluate({bad}, t.bank, t.cfg.s1_config(), t.weights, t.cfg.kernel(), t.cfg.inference, 8.0), RangeError);
}

TEST(Trace, OneLinePerDecision) {
  std::vector<Decision> d{{1, {0.5, 2.0}, 5.0}, {0, {1.0, 0.0}, 10.0}};
  EXPECT_EQ(decision_trace_text(d), "5 1 0.5 2\n10 0 1 0\n");
}
