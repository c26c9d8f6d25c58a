#include "spikestream/readout.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spikestream/errors.hpp"
#include "spikestream/pipeline.hpp"

namespace spikestream::readout {

void InferenceConfig::validate() const {
  if (!(threshold > reset)) throw ParameterError("decision threshold must exceed the reset value");
  if (!(period_ms > 0)) throw ParameterError("decision period must be positive");
}

int argmax(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<double> class_rates(const std::vector<double>& counts, int classes, int population) {
  if (counts.size() != static_cast<std::size_t>(classes) * population) throw ShapeError("counts do not match classes x population");
  std::vector<double> rates(static_cast<std::size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c) {
    for (int n = 0; n < population; ++n) rates[c] += counts[c * population + n];
    rates[c] /= population;
  }
  return rates;
}

DecisionLayer::DecisionLayer(const WeightMatrix& weights, const snn::PspKernel& kernel, double threshold, double reset)
    : w_(weights),
      kernel_(kernel),
      threshold_(threshold),
      reset_(reset),
      inv_m_(1.0 / kernel.tau_m()),
      inv_s_(1.0 / kernel.tau_s()),
      stat_c_(kernel.tau_m() * kernel.tau_s() / (kernel.tau_m() - kernel.tau_s())),
      ratio_(kernel.tau_m() / kernel.tau_s()),
      m_(static_cast<std::size_t>(weights.neurons()), 0.0),
      s_(static_cast<std::size_t>(weights.neurons()), 0.0),
      out_(static_cast<std::size_t>(weights.neurons())) {
  if (!(threshold > reset)) throw ParameterError("decision threshold must exceed the reset value");
}

void DecisionLayer::advance_to(double t) {
  if (t < now_) throw OrderingError("decision layer cannot move backwards in time");
  if (t == now_) return;
  const double dt = t - now_;
  const double fm = std::exp(-dt * inv_m_), fs = std::exp(-dt * inv_s_);
  const double arg_max = std::exp(dt / stat_c_);
  for (std::size_t j = 0; j < m_.size(); ++j) {
    const double m = m_[j], s = s_[j];
    bool crossing = m * fm - s * fs > threshold_;
    if (!crossing && m != 0.0) {
      const double arg = ratio_ * s / m;
      if (arg > 1.0 && arg < arg_max) {
        const double x = stat_c_ * std::log(arg);
        crossing = m * std::exp(-x * inv_m_) - s * std::exp(-x * inv_s_) > threshold_;
      }
    }
    if (!crossing) {
      m_[j] = m * fm;
      s_[j] = s * fs;
      continue;
    }
    snn::MembraneState st(kernel_, now_);
    st.set(m, s);
    double cursor = now_;
    while (auto c = snn::first_crossing(st, cursor, t, threshold_)) {
      out_[j].push_back(*c);
      st.advance(*c);
      st.set(reset_, 0.0);
      cursor = *c;
    }
    st.advance(t);
    m_[j] = st.m();
    s_[j] = st.s();
  }
  now_ = t;
}

void DecisionLayer::deliver(std::uint32_t afferent) {
  if (static_cast<int>(afferent) >= w_.afferents())
    throw ShapeError("afferent " + std::to_string(afferent) + " beyond weight matrix width " + std::to_string(w_.afferents()));
  const double v0 = kernel_.v0();
  for (std::size_t j = 0; j < m_.size(); ++j) {
    const double d = v0 * w_.at(static_cast<int>(j), static_cast<int>(afferent));
    m_[j] += d;
    s_[j] += d;
  }
}

std::vector<double> DecisionLayer::counts_in_window(double t, double window) const {
  std::vector<double> counts(out_.size());
  for (std::size_t j = 0; j < out_.size(); ++j) {
    auto lo = std::upper_bound(out_[j].begin(), out_[j].end(), t - window);
    auto hi = std::upper_bound(out_[j].begin(), out_[j].end(), t);
    counts[j] = static_cast<double>(hi - lo);
  }
  return counts;
}

std::vector<double> DecisionLayer::total_counts() const {
  std::vector<double> counts(out_.size());
  for (std::size_t j = 0; j < out_.size(); ++j) counts[j] = static_cast<double>(out_[j].size());
  return counts;
}

Decision classify(const std::vector<snn::AfferentSpike>& features, double duration_ms, const WeightMatrix& weights,
                  const snn::PspKernel& kernel, const InferenceConfig& config) {
  config.validate();
  snn::check_sorted(features);
  DecisionLayer layer(weights, kernel, config.threshold, config.reset);
  for (const auto& f : features) {
    if (f.t > duration_ms) break;
    layer.advance_to(f.t);
    layer.deliver(f.afferent);
  }
  layer.advance_to(std::max(duration_ms, layer.now()));
  Decision d;
  d.class_rates = class_rates(layer.counts_in_window(duration_ms, std::numeric_limits<double>::infinity()),
                              weights.classes(), weights.population());
  d.predicted = argmax(d.class_rates);
  d.time_ms = duration_ms;
  return d;
}

StreamingClassifier::StreamingClassifier(const gabor::GaborBank& bank, events::Geometry geometry,
                                         const gabor::S1Config& s1, const WeightMatrix& weights,
                                         const snn::PspKernel& kernel, const InferenceConfig& config, double window_ms)
    : s1_(bank, geometry, s1),
      weights_(weights),
      config_(config),
      window_(window_ms),
      layer_(weights, kernel, config.threshold, config.reset),
      layout_(s1_.layout()) {
  config_.validate();
  if (!(window_ms > 0)) throw ParameterError("streaming rate window must be positive");
  if (layout_.afferent_count() != weights.afferents())
    throw ShapeError("weights expect " + std::to_string(weights.afferents()) + " afferents, stream provides " +
                     std::to_string(layout_.afferent_count()));
}

void StreamingClassifier::emit_until(double t_ms, std::vector<Decision>& out) {
  while (true) {
    const double due = static_cast<double>(next_index_) * config_.period_ms;
    if (due > t_ms) break;
    layer_.advance_to(due);
    Decision d;
    d.class_rates = class_rates(layer_.counts_in_window(due, window_), weights_.classes(), weights_.population());
    d.predicted = argmax(d.class_rates);
    d.time_ms = due;
    out.push_back(std::move(d));
    ++next_index_;
  }
}

std::vector<Decision> StreamingClassifier::push(const events::Event& event) {
  std::vector<Decision> out;
  const double t = events::to_ms(event.t);
  emit_until(t, out);
  scratch_.clear();
  s1_.process(event, scratch_);
  if (!scratch_.empty()) {
    layer_.advance_to(t);
    for (const auto& f : scratch_) layer_.deliver(static_cast<std::uint32_t>(layout_.afferent(f)));
  }
  return out;
}

std::vector<Decision> StreamingClassifier::finish(events::Microseconds duration) {
  std::vector<Decision> out;
  emit_until(events::to_ms(duration), out);
  return out;
}

std::vector<Decision> classify_stream(const events::EventStream& stream, const gabor::GaborBank& bank,
                                      const gabor::S1Config& s1, const WeightMatrix& weights,
                                      const snn::PspKernel& kernel, const InferenceConfig& config, double window_ms) {
  std::vector<Decision> out;
  if (stream.events.empty() && stream.duration == 0) return out;
  StreamingClassifier sc(bank, stream.geometry, s1, weights, kernel, config, window_ms);
  for (const auto& e : stream.events) {
    auto d = sc.push(e);
    out.insert(out.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  }
  auto d = sc.finish(stream.duration);
  out.insert(out.end(), std::make_move_iterator(d.begin()), std::make_move_iterator(d.end()));
  return out;
}

std::optional<double> stabilization_time(const std::vector<Decision>& decisions, int label, double from_ms,
                                         double until_ms) {
  std::optional<double> since;
  for (const auto& d : decisions) {
    if (d.time_ms < from_ms || d.time_ms >= until_ms) continue;
    if (d.predicted != label) since.reset();
    else if (!since) since = d.time_ms;
  }
  return since;
}

std::string AccuracyReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "accuracy " << accuracy << " (" << correct << "/" << total << ")\n";
  for (int c = 0; c < classes; ++c) {
    os << "class " << c << ": ";
    if (per_class[c].accuracy) os << *per_class[c].accuracy << " (" << per_class[c].correct << "/" << per_class[c].support << ")\n";
    else os << "absent\n";
  }
  os << "confusion (rows true, columns predicted)\n";
  for (const auto& row : confusion) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? " " : "") << row[i];
    os << '\n';
  }
  if (mean_latency_ms) os << "mean streaming latency " << *mean_latency_ms << " ms over " << latency_samples << " samples\n";
  else os << "mean streaming latency n/a\n";
  return os.str();
}

std::string AccuracyReport::to_json() const {
  nlohmann::json j;
  j["classes"] = classes;
  j["total"] = total;
  j["correct"] = correct;
  j["accuracy"] = accuracy;
  j["confusion"] = confusion;
  auto& rows = j["per_class"] = nlohmann::json::array();
  for (const auto& r : per_class) {
    nlohmann::json row{{"support", r.support}, {"correct", r.correct}};
    row["accuracy"] = r.accuracy ? nlohmann::json(*r.accuracy) : nlohmann::json(nullptr);
    rows.push_back(row);
  }
  j["mean_latency_ms"] = mean_latency_ms ? nlohmann::json(*mean_latency_ms) : nlohmann::json(nullptr);
  j["latency_samples"] = latency_samples;
  return j.dump(2);
}

AccuracyReport evaluate(const std::vector<events::EventStream>& testset, const gabor::GaborBank& bank,
                        const gabor::S1Config& s1, const WeightMatrix& weights, const snn::PspKernel& kernel,
                        const InferenceConfig& config, double window_ms, const EvalOptions& options) {
  if (testset.empty()) throw ParameterError("evaluation needs a non-empty test set");
  const int C = weights.classes();
  std::vector<int> predicted(testset.size());
  std::vector<std::optional<double>> latency(testset.size());
  parallel_for(testset.size(), options.threads, [&](std::size_t i) {
    const auto& stream = testset[i];
    const int label = stream.label.value_or(-1);
    if (label < 0 || label >= C) throw RangeError("test sample " + std::to_string(i) + " has no valid label");
    if (gabor::FeatureLayout::of(bank, stream.geometry, s1).afferent_count() != weights.afferents())
      throw ShapeError("test sample " + std::to_string(i) + " does not match the weight dimensions");
    auto f = featurize(stream, bank, s1);
    predicted[i] = classify(f.spikes, f.duration_ms, weights, kernel, config).predicted;
    if (options.streaming_latency)
      latency[i] = stabilization_time(classify_stream(stream, bank, s1, weights, kernel, config, window_ms), label);
  });

  AccuracyReport r;
  r.classes = C;
  r.per_class.assign(static_cast<std::size_t>(C), {});
  r.confusion.assign(static_cast<std::size_t>(C), std::vector<int>(static_cast<std::size_t>(C), 0));
  double latency_sum = 0.0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const int label = *testset[i].label;
    ++r.total;
    ++r.per_class[label].support;
    ++r.confusion[label][predicted[i]];
    if (predicted[i] == label) {
      ++r.correct;
      ++r.per_class[label].correct;
    }
    if (latency[i]) {
      latency_sum += *latency[i];
      ++r.latency_samples;
    }
  }
  r.accuracy = static_cast<double>(r.correct) / r.total;
  for (auto& row : r.per_class)
    if (row.support > 0) row.accuracy = static_cast<double>(row.correct) / row.support;
  if (r.latency_samples > 0) r.mean_latency_ms = latency_sum / r.latency_samples;
  return r;
}

std::string decision_trace_text(const std::vector<Decision>& decisions) {
  std::ostringstream os;
  os << std::setprecision(10);
  for (const auto& d : decisions) {
    os << d.time_ms << ' ' << d.predicted;
    for (double r : d.class_rates) os << ' ' << r;
    os << '\n';
  }
  return os.str();
}

}  // namespace spikestream::readout
