#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spikestream/event.hpp"

namespace spikestream::gabor {

using events::Microseconds;

struct ScaleParams {
  int size = 3;  // odd kernel side, half-width (size - 1) / 2
  double sigma = 1.2;
  double wavelength = 1.5;
  friend bool operator==(const ScaleParams&, const ScaleParams&) = default;
};

struct GaborParams {
  double gamma = 0.3;
  std::vector<ScaleParams> scales{{3, 1.2, 1.5}, {5, 2.0, 2.5}, {7, 2.8, 3.5}, {9, 3.6, 4.6}};
  std::vector<double> orientations_deg{0.0, 45.0, 90.0, 135.0};

  void validate() const;
  friend bool operator==(const GaborParams&, const GaborParams&) = default;
};

// Plain evaluation of the oriented Gabor function at one offset.
double gabor_value(int dx, int dy, double theta_rad, double gamma, double sigma, double wavelength);

class GaborKernel {
 public:
  GaborKernel(int half_width, double theta_rad, double gamma, double sigma, double wavelength);

  int half_width() const { return half_; }
  int side() const { return 2 * half_ + 1; }
  // Offsets in [-half_width, half_width].
  double at(int dx, int dy) const { return values_[static_cast<std::size_t>((dy + half_) * side() + dx + half_)]; }
  const std::vector<double>& values() const { return values_; }

 private:
  int half_;
  std::vector<double> values_;
};

class GaborBank {
 public:
  static GaborBank build(const GaborParams& params);

  const GaborParams& params() const { return params_; }
  int scale_count() const { return static_cast<int>(params_.scales.size()); }
  int orientation_count() const { return static_cast<int>(params_.orientations_deg.size()); }
  const GaborKernel& kernel(int scale, int orientation) const {
    return kernels_[static_cast<std::size_t>(scale * orientation_count() + orientation)];
  }

 private:
  explicit GaborBank(GaborParams params) : params_(std::move(params)) {}
  GaborParams params_;
  std::vector<GaborKernel> kernels_;
};

// Per-scale parameter table as "key = value" lines for the [gabor] config section.
std::string to_config_text(const GaborParams& params);

struct S1Config {
  double tau_ms = 80.0;
  double threshold = 2.0;
  double reset = 0.0;
  // ON and OFF events feed separate maps (doubles the map count).
  bool split_polarity = false;

  void validate() const;
};

// One C1 output: which feature map fired, in which 2x2 unit, and when.
struct FeatureSpike {
  std::uint16_t map = 0;
  std::uint16_t ux = 0;  // 0-based unit column
  std::uint16_t uy = 0;  // 0-based unit row
  Microseconds t = 0;

  friend bool operator==(const FeatureSpike&, const FeatureSpike&) = default;
};

struct FeatureLayout {
  int maps = 0;
  int units_x = 0;
  int units_y = 0;

  static FeatureLayout of(const GaborBank& bank, events::Geometry geometry, const S1Config& config);
  int afferent_count() const { return maps * units_x * units_y; }
  int afferent(const FeatureSpike& s) const { return (s.map * units_y + s.uy) * units_x + s.ux; }
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

// Leaky S1 feature maps with 2x2 lateral inhibition. Voltages decay lazily:
// each neuron stores (voltage, last update) and is brought forward on access.
class S1Layer {
 public:
  S1Layer(GaborBank bank, events::Geometry geometry, S1Config config);

  // Appends the spikes caused by this event to `out`.
  void process(const events::Event& event, std::vector<FeatureSpike>& out);
  std::vector<FeatureSpike> process(const events::Event& event);

  // Decayed voltage of the neuron at 1-based pixel (x, y) in `map` at time t.
  double voltage(int map, int x, int y, Microseconds t) const;

  const FeatureLayout& layout() const { return layout_; }
  const GaborBank& bank() const { return bank_; }
  const S1Config& config() const { return config_; }
  events::Geometry geometry() const { return geometry_; }
  Microseconds last_time() const { return last_time_; }

 private:
  struct Cell {
    double v = 0.0;
    Microseconds t = 0;
  };
  Cell& cell(int map, int x, int y) {
    return cells_[(static_cast<std::size_t>(map) * geometry_.height + (y - 1)) * geometry_.width + (x - 1)];
  }
  const Cell& cell(int map, int x, int y) const {
    return cells_[(static_cast<std::size_t>(map) * geometry_.height + (y - 1)) * geometry_.width + (x - 1)];
  }
  void reset_unit(int map, int ux, int uy, Microseconds t);

  GaborBank bank_;
  events::Geometry geometry_;
  S1Config config_;
  FeatureLayout layout_;
  double inv_tau_us_;
  std::vector<Cell> cells_;
  Microseconds last_time_ = 0;
};

// Folds S1Layer::process over the whole stream.
std::vector<FeatureSpike> extract_features(const events::EventStream& stream, const GaborBank& bank,
                                           const S1Config& config);

// Event-io text layout with unit coordinates (1-based) and the map index in place of polarity.
std::string feature_spikes_to_text(const std::vector<FeatureSpike>& spikes, const FeatureLayout& layout,
                                   Microseconds duration);

}  // namespace spikestream::gabor
