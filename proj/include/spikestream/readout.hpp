#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spikestream/event.hpp"
#include "spikestream/gabor.hpp"
#include "spikestream/model.hpp"
#include "spikestream/snn.hpp"
#include "spikestream/spa.hpp"

namespace spikestream::readout {

struct InferenceConfig {
  double threshold = 1.0;
  double reset = 0.0;
  double period_ms = 5.0;
  // Trailing window for streaming spike counts; <= 0 means "use the training search range".
  double window_ms = 0.0;

  void validate() const;
};

struct Decision {
  int predicted = 0;
  std::vector<double> class_rates;  // mean output spikes per neuron in the window
  double time_ms = 0.0;
};

// Argmax with the lowest index winning ties.
int argmax(const std::vector<double>& values);

// Class-averaged counts per neuron, neuron = class * population + member.
std::vector<double> class_rates(const std::vector<double>& neuron_counts, int classes, int population);

// All decision neurons in reset-on-threshold mode, advanced together in time.
class DecisionLayer {
 public:
  DecisionLayer(const WeightMatrix& weights, const snn::PspKernel& kernel, double threshold, double reset);

  // Integrates to t (no input inside), recording threshold crossings.
  void advance_to(double t);
  // Delivers one afferent spike at the current time.
  void deliver(std::uint32_t afferent);
  double now() const { return now_; }
  double voltage(int neuron) const { return m_[neuron] - s_[neuron]; }
  const std::vector<std::vector<double>>& output_spikes() const { return out_; }
  // Output spikes of each neuron inside (t - window, t].
  std::vector<double> counts_in_window(double t, double window) const;
  std::vector<double> total_counts() const;

 private:
  const WeightMatrix& w_;
  snn::PspKernel kernel_;
  double threshold_, reset_;
  double inv_m_, inv_s_, stat_c_, ratio_;
  double now_ = 0.0;
  std::vector<double> m_, s_;
  std::vector<std::vector<double>> out_;
};

// Counts every neuron's output spikes over (0, duration] and picks the class with
// the highest population-average count.
Decision classify(const std::vector<snn::AfferentSpike>& features, double duration_ms, const WeightMatrix& weights,
                  const snn::PspKernel& kernel, const InferenceConfig& config);

// Incremental S1/C1 + decision pipeline. Decisions fall at multiples of the period.
class StreamingClassifier {
 public:
  StreamingClassifier(const gabor::GaborBank& bank, events::Geometry geometry, const gabor::S1Config& s1,
                      const WeightMatrix& weights, const snn::PspKernel& kernel, const InferenceConfig& config,
                      double window_ms);

  // Returns decisions that became due before this event.
  std::vector<Decision> push(const events::Event& event);
  // Emits the remaining decisions up to the stream duration.
  std::vector<Decision> finish(events::Microseconds duration);

 private:
  void emit_until(double t_ms, std::vector<Decision>& out);

  gabor::S1Layer s1_;
  const WeightMatrix& weights_;
  InferenceConfig config_;
  double window_;
  DecisionLayer layer_;
  gabor::FeatureLayout layout_;
  std::vector<gabor::FeatureSpike> scratch_;
  long long next_index_ = 1;
};

std::vector<Decision> classify_stream(const events::EventStream& stream, const gabor::GaborBank& bank,
                                      const gabor::S1Config& s1, const WeightMatrix& weights,
                                      const snn::PspKernel& kernel, const InferenceConfig& config, double window_ms);

// Earliest decision time from which every later decision equals `label`; empty
// when the last decision is wrong.
std::optional<double> stabilization_time(const std::vector<Decision>& decisions, int label, double from_ms = 0.0,
                                         double until_ms = 1e300);

struct ClassRow {
  int support = 0;
  int correct = 0;
  std::optional<double> accuracy;  // absent when support == 0
};

struct AccuracyReport {
  int classes = 0;
  int total = 0;
  int correct = 0;
  double accuracy = 0.0;
  std::vector<ClassRow> per_class;
  std::vector<std::vector<int>> confusion;  // [true][predicted]
  std::optional<double> mean_latency_ms;
  int latency_samples = 0;

  std::string to_text() const;
  std::string to_json() const;
};

struct EvalOptions {
  bool streaming_latency = true;
  int threads = 1;
};

AccuracyReport evaluate(const std::vector<events::EventStream>& testset, const gabor::GaborBank& bank,
                        const gabor::S1Config& s1, const WeightMatrix& weights, const snn::PspKernel& kernel,
                        const InferenceConfig& config, double window_ms, const EvalOptions& options = {});

// One line per decision: time_ms predicted rate_0 ... rate_{C-1}
std::string decision_trace_text(const std::vector<Decision>& decisions);

}  // namespace spikestream::readout
