#include "spikestream/spa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "random.hpp"
#include "spikestream/errors.hpp"

namespace spikestream::spa {

double softplus(double v) {
  if (v > 30.0) return v + std::log1p(std::exp(-v));
  return std::log1p(std::exp(v));
}

double sigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

RateVector RateVector::from_peaks(std::span<const double> v_peaks) {
  RateVector r;
  r.peaks.assign(v_peaks.begin(), v_peaks.end());
  r.rates.reserve(v_peaks.size());
  for (double v : v_peaks) r.rates.push_back(softplus(v));
  r.sum = std::accumulate(r.rates.begin(), r.rates.end(), 0.0);
  return r;
}

std::vector<double> class_probabilities(const RateVector& rates) {
  std::vector<double> p;
  p.reserve(rates.rates.size());
  for (double f : rates.rates) p.push_back(f / rates.sum);
  return p;
}

std::vector<double> loss_gradient_wrt_peaks(const RateVector& rates, int true_class) {
  const int classes = static_cast<int>(rates.rates.size());
  if (true_class < 0 || true_class >= classes)
    throw RangeError("class " + std::to_string(true_class) + " outside 0.." + std::to_string(classes - 1));
  if (rates.peaks.size() != rates.rates.size()) throw ShapeError("rate vector without matching peaks");
  std::vector<double> g(static_cast<std::size_t>(classes));
  for (int j = 0; j < classes; ++j) {
    const double f = rates.rates[j], df = sigmoid(rates.peaks[j]);
    g[j] = j == true_class ? -df * (rates.sum - f) / (rates.sum * f) : df / rates.sum;
  }
  return g;
}

std::vector<double> peak_gradient_wrt_weights(const snn::PspKernel& kernel, std::span<const snn::AfferentSpike> spikes,
                                              int afferent_count, double t_start, double t_peak) {
  std::vector<double> g(static_cast<std::size_t>(afferent_count), 0.0);
  for (const snn::AfferentSpike& s : spikes) {
    if (s.t < t_start || s.t >= t_peak) continue;
    if (s.afferent >= g.size()) throw ShapeError("afferent index beyond afferent count");
    g[s.afferent] += kernel(t_peak - s.t);
  }
  return g;
}

SegmentLoss population_loss(std::span<const double> neuron_peaks, int classes, int population, int true_class) {
  if (true_class < 0 || true_class >= classes)
    throw RangeError("class " + std::to_string(true_class) + " outside 0.." + std::to_string(classes - 1));
  if (neuron_peaks.size() != static_cast<std::size_t>(classes) * population)
    throw ShapeError("peak vector does not match classes x population");
  SegmentLoss out;
  out.class_rates.assign(static_cast<std::size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c) {
    double acc = 0.0;
    for (int n = 0; n < population; ++n) acc += softplus(neuron_peaks[c * population + n]);
    out.class_rates[c] = acc / population;
  }
  const double sum = std::accumulate(out.class_rates.begin(), out.class_rates.end(), 0.0);
  out.probabilities.reserve(out.class_rates.size());
  for (double f : out.class_rates) out.probabilities.push_back(f / sum);
  out.predicted = static_cast<int>(std::max_element(out.probabilities.begin(), out.probabilities.end()) -
                                   out.probabilities.begin());
  const double f_true = out.class_rates[true_class];
  out.loss = std::log(sum) - std::log(f_true);
  out.dloss_dpeak.resize(neuron_peaks.size());
  for (int c = 0; c < classes; ++c) {
    const double dl_df = c == true_class ? -(sum - f_true) / (sum * f_true) : 1.0 / sum;
    for (int n = 0; n < population; ++n) {
      const int j = c * population + n;
      out.dloss_dpeak[j] = dl_df * sigmoid(neuron_peaks[j]) / population;
    }
  }
  return out;
}

void SpaConfig::validate() const {
  if (!(learning_rate >= 0) || !std::isfinite(learning_rate)) throw ParameterError("learning rate must be >= 0");
  if (!(search_range_ms > 0)) throw ParameterError("search range must be positive");
  if (iterations < 0) throw ParameterError("iterations must be >= 0");
  if (classes < 1) throw ParameterError("classes must be >= 1");
  if (population < 1) throw ParameterError("population must be >= 1");
  if (!(init_high >= init_low)) throw ParameterError("weight init range is empty");
  if (plateau_window < 1) throw ParameterError("plateau window must be >= 1");
}

WeightMatrix initial_weights(const SpaConfig& config, int afferent_count) {
  config.validate();
  WeightMatrix w(config.classes, config.population, afferent_count);
  std::mt19937_64 rng(detail::mix_seed(config.seed, 0x5EED));
  for (double& x : w.data()) x = config.init_low + (config.init_high - config.init_low) * detail::uniform01(rng);
  return w;
}

WeightMatrix segment_update(const WeightMatrix& weights, const snn::PspKernel& kernel,
                            std::span<const snn::AfferentSpike> spikes, double t_start,
                            std::span<const snn::PeakResult> peaks, int true_class, double learning_rate,
                            SegmentLoss* loss) {
  if (peaks.size() != static_cast<std::size_t>(weights.neurons())) throw ShapeError("one peak per neuron required");
  std::vector<double> v_peaks;
  v_peaks.reserve(peaks.size());
  for (const auto& p : peaks) v_peaks.push_back(p.v_peak);
  SegmentLoss sl = population_loss(v_peaks, weights.classes(), weights.population(), true_class);
  WeightMatrix delta(weights.classes(), weights.population(), weights.afferents());
  for (int j = 0; j < weights.neurons(); ++j) {
    auto grad = peak_gradient_wrt_weights(kernel, spikes, weights.afferents(), t_start, peaks[j].t_peak);
    for (int a = 0; a < weights.afferents(); ++a) delta.at(j, a) = -learning_rate * sl.dloss_dpeak[j] * grad[a];
  }
  if (loss) *loss = std::move(sl);
  return delta;
}

namespace {

// Per-sample event-driven state for all decision neurons. Weights are kept
// afferent-major so that one input spike touches a contiguous row.
class SegmentRunner {
 public:
  SegmentRunner(const snn::PspKernel& kernel, const SpaConfig& config, std::vector<double>& weights_t, int neurons)
      : kernel_(kernel),
        config_(config),
        w_(weights_t),
        J_(neurons),
        inv_m_(1.0 / kernel.tau_m()),
        inv_s_(1.0 / kernel.tau_s()),
        stat_c_(kernel.tau_m() * kernel.tau_s() / (kernel.tau_m() - kernel.tau_s())),
        ratio_(kernel.tau_m() / kernel.tau_s()) {
    cm_.resize(J_);
    cs_.resize(J_);
    tm_.resize(J_);
    ts_.resize(J_);
    best_t_.resize(J_);
    best_v_.resize(J_);
    dm_.resize(J_);
    ds_.resize(J_);
    em_.resize(J_);
    es_.resize(J_);
    step_.resize(J_);
  }

  // Runs every segment of one sample, appending one record per segment.
  void run(const LabeledFeatures& sample, int iteration, std::size_t sample_index, std::vector<LossRecord>& out) {
    spikes_ = &sample.spikes;
    begin_sample(sample);
    const double L = sample.duration_ms;
    const double res = std::min(snn::kPeakResolutionMs, config_.search_range_ms);
    const auto max_segments = static_cast<std::size_t>(std::ceil(L / res)) + 1;
    double t_s = 0.0;
    absorb(t_s);
    std::size_t segment = 0;
    std::vector<double> peaks(static_cast<std::size_t>(J_));
    while (L - t_s > snn::kEndSlackMs) {
      if (segment >= max_segments) throw std::logic_error("segment loop exceeded its bound");
      scan(t_s);
      for (int j = 0; j < J_; ++j) peaks[j] = best_v_[j];
      SegmentLoss sl = population_loss(peaks, config_.classes, config_.population, sample.label);
      const double t_next = *std::max_element(best_t_.begin(), best_t_.end());

      LossRecord rec;
      rec.iteration = iteration;
      rec.sample = sample_index;
      rec.segment = segment;
      rec.t_start = t_s;
      rec.loss = sl.loss;
      rec.predicted = sl.predicted;
      rec.p_true = sl.probabilities[sample.label];
      rec.class_peak_times.assign(static_cast<std::size_t>(config_.classes), t_s);
      for (int j = 0; j < J_; ++j) {
        double& c = rec.class_peak_times[j / config_.population];
        c = std::max(c, best_t_[j]);
      }
      out.push_back(std::move(rec));

      apply_update(t_s, t_next, sl.dloss_dpeak);
      for (int j = 0; j < J_; ++j)
        if (!std::isfinite(cm_[j]) || !std::isfinite(cs_[j]) || !std::isfinite(sl.dloss_dpeak[j]))
          throw DivergenceError(iteration, sample_index, segment);
      t_s = t_next;
      ++segment;
    }
  }

 private:
  void begin_sample(const LabeledFeatures& sample) {
    std::fill(cm_.begin(), cm_.end(), 0.0);
    std::fill(cs_.begin(), cs_.end(), 0.0);
    t_ref_ = 0.0;
    cursor_ = 0;
    ++epoch_;
    std::uint32_t max_aff = 0;
    for (const auto& s : sample.spikes) max_aff = std::max(max_aff, s.afferent + 1);
    if (trace_.size() < max_aff) trace_.resize(max_aff);
    if (stamp_.size() < max_aff) stamp_.resize(max_aff, 0);
    if (static_cast<std::size_t>(max_aff) * J_ > w_.size()) throw ShapeError("feature afferent beyond weight matrix");
  }

  // Commits every input with t <= until into the per-neuron state (current weights).
  void absorb(double until) {
    const auto& sp = *spikes_;
    while (cursor_ < sp.size() && sp[cursor_].t <= until) {
      const double t = sp[cursor_].t;
      commit_decay(t);
      while (cursor_ < sp.size() && sp[cursor_].t == t) {
        const auto a = sp[cursor_].afferent;
        inject(cm_, cs_, a);
        Trace& tr = trace_[a];
        if (stamp_[a] != epoch_) {
          tr = {};
          stamp_[a] = epoch_;
        }
        tr.m = tr.m * std::exp(-(t - tr.t) * inv_m_) + kernel_.v0();
        tr.s = tr.s * std::exp(-(t - tr.t) * inv_s_) + kernel_.v0();
        tr.t = t;
        ++cursor_;
      }
    }
    commit_decay(until);
  }

  void commit_decay(double t) {
    if (t == t_ref_) return;
    const double fm = std::exp(-(t - t_ref_) * inv_m_), fs = std::exp(-(t - t_ref_) * inv_s_);
    for (int j = 0; j < J_; ++j) {
      cm_[j] *= fm;
      cs_[j] *= fs;
    }
    t_ref_ = t;
  }

  void inject(std::vector<double>& m, std::vector<double>& s, std::uint32_t a) {
    const double* w = w_.data() + static_cast<std::size_t>(a) * J_;
    const double v0 = kernel_.v0();
    for (int j = 0; j < J_; ++j) {
      m[j] += v0 * w[j];
      s[j] += v0 * w[j];
    }
  }

  // Peak detection for all neurons over (t_s, t_s + t_R]; same candidate rules as snn::detect_peak.
  void scan(double t_s) {
    const auto& sp = *spikes_;
    const double t_end = t_s + config_.search_range_ms;
    const double first = t_s + std::min(snn::kPeakResolutionMs, config_.search_range_ms);
    tm_ = cm_;
    ts_ = cs_;
    std::fill(best_t_.begin(), best_t_.end(), first);
    std::fill(best_v_.begin(), best_v_.end(), -std::numeric_limits<double>::infinity());
    std::size_t i = cursor_;
    double lo = t_s;
    while (true) {
      double hi = t_end;
      if (first > lo) hi = std::min(hi, first);
      if (i < sp.size() && sp[i].t < hi) hi = sp[i].t;
      const double dt = hi - lo;
      const double fm = std::exp(-dt * inv_m_), fs = std::exp(-dt * inv_s_);
      const double arg_max = std::exp(dt / stat_c_);
      // Nothing before the first admissible time is a candidate.
      const bool admit_end = hi >= first, admit_interior = lo >= first;
      for (int j = 0; j < J_; ++j) {
        double m = tm_[j], s = ts_[j];
        if (m != 0.0 && admit_interior) {
          const double arg = ratio_ * s / m;
          if (arg > 1.0 && arg < arg_max) {
            const double x = stat_c_ * std::log(arg);
            const double v = m * std::exp(-x * inv_m_) - s * std::exp(-x * inv_s_);
            if (v > best_v_[j]) {
              best_v_[j] = v;
              best_t_[j] = lo + x;
            }
          }
        }
        m *= fm;
        s *= fs;
        const double v = m - s;
        if (admit_end && v > best_v_[j]) {
          best_v_[j] = v;
          best_t_[j] = hi;
        }
        tm_[j] = m;
        ts_[j] = s;
      }
      if (hi >= t_end) break;
      while (i < sp.size() && sp[i].t == hi) inject(tm_, ts_, sp[i++].afferent);
      lo = hi;
    }
  }

  // Applies Δw for the segment starting at t_s and re-expresses the committed
  // state at t_next under the new weights.
  void apply_update(double t_s, double t_next, const std::vector<double>& dloss) {
    const auto& sp = *spikes_;
    const double v0 = kernel_.v0();
    for (int j = 0; j < J_; ++j) {
      em_[j] = std::exp(-(best_t_[j] - t_s) * inv_m_);
      es_[j] = std::exp(-(best_t_[j] - t_s) * inv_s_);
      step_[j] = -config_.learning_rate * dloss[j] * v0;
    }
    auto first = std::lower_bound(sp.begin(), sp.end(), t_s,
                                  [](const snn::AfferentSpike& s, double t) { return s.t < t; });
    absorb(t_next);
    std::fill(dm_.begin(), dm_.end(), 0.0);
    std::fill(ds_.begin(), ds_.end(), 0.0);
    for (auto it = first; it != sp.end() && it->t < t_next; ++it) {
      const auto a = it->afferent;
      const double gm = std::exp((it->t - t_s) * inv_m_), gs = std::exp((it->t - t_s) * inv_s_);
      const Trace& tr = trace_[a];
      const double am = tr.m * std::exp(-(t_next - tr.t) * inv_m_);
      const double as = tr.s * std::exp(-(t_next - tr.t) * inv_s_);
      double* w = w_.data() + static_cast<std::size_t>(a) * J_;
      for (int j = 0; j < J_; ++j) {
        if (!(it->t < best_t_[j])) continue;
        const double d = step_[j] * (em_[j] * gm - es_[j] * gs);
        w[j] += d;
        dm_[j] += d * am;
        ds_[j] += d * as;
      }
    }
    for (int j = 0; j < J_; ++j) {
      cm_[j] += dm_[j];
      cs_[j] += ds_[j];
    }
  }

  struct Trace {
    double m = 0.0, s = 0.0, t = 0.0;
  };

  const snn::PspKernel& kernel_;
  const SpaConfig& config_;
  std::vector<double>& w_;
  int J_;
  double inv_m_, inv_s_, stat_c_, ratio_;
  const std::vector<snn::AfferentSpike>* spikes_ = nullptr;
  std::vector<double> cm_, cs_, tm_, ts_, best_t_, best_v_, dm_, ds_, em_, es_, step_;
  double t_ref_ = 0.0;
  std::size_t cursor_ = 0;
  std::vector<Trace> trace_;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

}  // namespace

TrainResult spa_train(std::span<const LabeledFeatures> samples, int afferent_count, const snn::PspKernel& kernel,
                      const SpaConfig& config, const WeightMatrix* init) {
  config.validate();
  if (samples.empty()) throw ParameterError("training needs at least one labeled sample");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].label < 0 || samples[k].label >= config.classes)
      throw RangeError("sample " + std::to_string(k) + " label out of range");
    snn::check_sorted(samples[k].spikes);
  }

  TrainResult result;
  result.weights = init ? *init : initial_weights(config, afferent_count);
  WeightMatrix& W = result.weights;
  if (W.classes() != config.classes || W.population() != config.population || W.afferents() != afferent_count)
    throw ShapeError("initial weights do not match the training configuration");
  const int J = W.neurons();
  std::vector<double> wt(static_cast<std::size_t>(afferent_count) * J);
  for (int j = 0; j < J; ++j)
    for (int a = 0; a < afferent_count; ++a) wt[static_cast<std::size_t>(a) * J + j] = W.at(j, a);

  for (std::size_t k = 0; k < samples.size(); ++k)
    if (samples[k].spikes.empty()) result.skipped.push_back(k);

  std::mt19937_64 rng(detail::mix_seed(config.seed, 0x0DE5));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  SegmentRunner runner(kernel, config, wt, J);
  for (int it = 0; it < config.iterations; ++it) {
    if (config.shuffle) detail::shuffle(order, rng);
    const std::size_t before = result.records.size();
    for (std::size_t k : order) {
      if (samples[k].spikes.empty()) continue;
      runner.run(samples[k], it, k, result.records);
    }
    double total = 0.0;
    for (std::size_t r = before; r < result.records.size(); ++r) total += result.records[r].loss;
    const std::size_t n = result.records.size() - before;
    result.iteration_loss.push_back(n ? total / static_cast<double>(n) : 0.0);
    result.iterations_run = it + 1;
    if (config.early_stop && static_cast<int>(result.iteration_loss.size()) > config.plateau_window) {
      bool flat = true;
      const auto& L = result.iteration_loss;
      for (std::size_t r = L.size() - config.plateau_window; r < L.size(); ++r)
        if (std::abs(L[r] - L[r - 1]) >= config.plateau_tolerance * std::max(std::abs(L[r - 1]), 1e-300)) flat = false;
      if (flat) break;
    }
  }

  for (int j = 0; j < J; ++j)
    for (int a = 0; a < afferent_count; ++a) W.at(j, a) = wt[static_cast<std::size_t>(a) * J + j];
  for (double x : W.data())
    if (!std::isfinite(x)) throw DivergenceError(result.iterations_run - 1, 0, 0);
  return result;
}

}  // namespace spikestream::spa
