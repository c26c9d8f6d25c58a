#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "spikestream/model.hpp"
#include "spikestream/snn.hpp"

namespace spikestream::spa {

// log(exp(v) + 1) without overflow.
double softplus(double v);
// Derivative of softplus.
double sigmoid(double v);

struct RateVector {
  std::vector<double> peaks;
  std::vector<double> rates;
  double sum = 0.0;

  static RateVector from_peaks(std::span<const double> v_peaks);
};

std::vector<double> class_probabilities(const RateVector& rates);

// dL/dV_peak for one decision neuron per class, L = -log P(true class).
std::vector<double> loss_gradient_wrt_peaks(const RateVector& rates, int true_class);

// sum of K(t_peak - t_i) over the afferent's spikes with t_start <= t_i < t_peak.
std::vector<double> peak_gradient_wrt_weights(const snn::PspKernel& kernel, std::span<const snn::AfferentSpike> spikes,
                                              int afferent_count, double t_start, double t_peak);

// Loss and gradient when each class is read out by a population: the class rate
// is the mean softplus rate of its members.
struct SegmentLoss {
  std::vector<double> class_rates;
  std::vector<double> probabilities;
  std::vector<double> dloss_dpeak;  // per neuron
  double loss = 0.0;
  int predicted = 0;
};

SegmentLoss population_loss(std::span<const double> neuron_peaks, int classes, int population, int true_class);

struct SpaConfig {
  double learning_rate = 0.1;
  double search_range_ms = 80.0;
  int iterations = 20;
  int classes = 2;
  int population = 10;
  double init_low = 0.0;
  double init_high = 0.05;
  std::uint64_t seed = 1;
  bool shuffle = true;
  bool early_stop = false;
  double plateau_tolerance = 1e-4;
  int plateau_window = 3;

  void validate() const;
};

struct LabeledFeatures {
  std::vector<snn::AfferentSpike> spikes;  // time-sorted, ms
  double duration_ms = 0.0;
  int label = 0;
};

struct LossRecord {
  int iteration = 0;
  std::size_t sample = 0;
  std::size_t segment = 0;
  double t_start = 0.0;
  std::vector<double> class_peak_times;  // latest peak within each class population
  double loss = 0.0;
  int predicted = 0;
  double p_true = 0.0;
};

struct TrainResult {
  WeightMatrix weights;
  std::vector<LossRecord> records;
  std::vector<double> iteration_loss;  // mean segment loss per iteration
  std::vector<std::size_t> skipped;    // samples without any feature spike
  int iterations_run = 0;
};

WeightMatrix initial_weights(const SpaConfig& config, int afferent_count);

// Weight change for one segment given frozen peak times:
//   Δw_ji = -λ · dL/dV_peak^j · Σ_{t_start <= t_i < t_peak^j} K(t_peak^j - t_i)
// `peaks` holds one PeakResult per neuron.
WeightMatrix segment_update(const WeightMatrix& weights, const snn::PspKernel& kernel,
                            std::span<const snn::AfferentSpike> spikes, double t_start,
                            std::span<const snn::PeakResult> peaks, int true_class, double learning_rate,
                            SegmentLoss* loss = nullptr);

// Online segmented training. `init` overrides the seeded initialisation.
TrainResult spa_train(std::span<const LabeledFeatures> samples, int afferent_count, const snn::PspKernel& kernel,
                      const SpaConfig& config, const WeightMatrix* init = nullptr);

}  // namespace spikestream::spa
