#include "spikestream/gabor.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "spikestream/errors.hpp"

namespace spikestream::gabor {

void GaborParams::validate() const {
  if (!(gamma > 0)) throw ParameterError("gabor gamma must be positive");
  if (scales.empty() || orientations_deg.empty()) throw ParameterError("gabor bank needs scales and orientations");
  for (const ScaleParams& s : scales) {
    if (s.size < 3 || s.size % 2 == 0) throw ParameterError("gabor kernel size must be odd and >= 3");
    if (!(s.sigma > 0) || !(s.wavelength > 0)) throw ParameterError("gabor sigma and wavelength must be positive");
  }
}

double gabor_value(int dx, int dy, double theta, double gamma, double sigma, double wavelength) {
  const double X = dx * std::cos(theta) + dy * std::sin(theta);
  const double Y = -dx * std::sin(theta) + dy * std::cos(theta);
  return std::exp(-(X * X + gamma * gamma * Y * Y) / (2.0 * sigma * sigma)) *
         std::cos(2.0 * std::numbers::pi * X / wavelength);
}

GaborKernel::GaborKernel(int half_width, double theta, double gamma, double sigma, double wavelength)
    : half_(half_width), values_(static_cast<std::size_t>((2 * half_width + 1) * (2 * half_width + 1))) {
  for (int dy = -half_; dy <= half_; ++dy)
    for (int dx = -half_; dx <= half_; ++dx)
      values_[static_cast<std::size_t>((dy + half_) * side() + dx + half_)] =
          gabor_value(dx, dy, theta, gamma, sigma, wavelength);
}

GaborBank GaborBank::build(const GaborParams& params) {
  params.validate();
  GaborBank bank(params);
  for (const ScaleParams& s : params.scales)
    for (double deg : params.orientations_deg)
      bank.kernels_.emplace_back((s.size - 1) / 2, deg * std::numbers::pi / 180.0, params.gamma, s.sigma,
                                 s.wavelength);
  return bank;
}

std::string to_config_text(const GaborParams& params) {
  std::ostringstream os;
  os.precision(17);
  auto list = [&](auto get) {
    for (std::size_t i = 0; i < params.scales.size(); ++i) os << (i ? ", " : "") << get(params.scales[i]);
    os << '\n';
  };
  os << "gamma = " << params.gamma << '\n';
  os << "sizes = ";
  list([](const ScaleParams& s) { return static_cast<double>(s.size); });
  os << "sigmas = ";
  list([](const ScaleParams& s) { return s.sigma; });
  os << "wavelengths = ";
  list([](const ScaleParams& s) { return s.wavelength; });
  os << "orientations = ";
  for (std::size_t i = 0; i < params.orientations_deg.size(); ++i)
    os << (i ? ", " : "") << params.orientations_deg[i];
  os << '\n';
  return os.str();
}

void S1Config::validate() const {
  if (!(tau_ms > 0)) throw ParameterError("S1 decay constant must be positive");
  if (!(threshold > reset)) throw ParameterError("S1 threshold must exceed the reset value");
}

FeatureLayout FeatureLayout::of(const GaborBank& bank, events::Geometry geometry, const S1Config& config) {
  FeatureLayout l;
  l.maps = bank.scale_count() * bank.orientation_count() * (config.split_polarity ? 2 : 1);
  l.units_x = (geometry.width + 1) / 2;
  l.units_y = (geometry.height + 1) / 2;
  return l;
}

S1Layer::S1Layer(GaborBank bank, events::Geometry geometry, S1Config config)
    : bank_(std::move(bank)), geometry_(geometry), config_(config) {
  config_.validate();
  if (geometry_.empty()) throw GeometryError("S1 layer needs a non-empty geometry");
  layout_ = FeatureLayout::of(bank_, geometry_, config_);
  if (layout_.maps > 65535 || layout_.units_x > 65535) throw GeometryError("feature layout too large");
  inv_tau_us_ = 1.0 / (config_.tau_ms * 1000.0);
  cells_.assign(static_cast<std::size_t>(layout_.maps) * geometry_.width * geometry_.height, Cell{config_.reset, 0});
}

void S1Layer::reset_unit(int map, int ux, int uy, Microseconds t) {
  for (int y = 2 * uy + 1; y <= std::min(2 * uy + 2, geometry_.height); ++y)
    for (int x = 2 * ux + 1; x <= std::min(2 * ux + 2, geometry_.width); ++x) cell(map, x, y) = {config_.reset, t};
}

void S1Layer::process(const events::Event& e, std::vector<FeatureSpike>& out) {
  if (!geometry_.contains(e.x, e.y))
    throw GeometryError("event at (" + std::to_string(e.x) + ", " + std::to_string(e.y) + ") outside S1 geometry");
  if (e.t < last_time_) throw OrderingError("event time " + std::to_string(e.t) + " precedes " + std::to_string(last_time_));
  last_time_ = e.t;

  const int per_block = bank_.scale_count() * bank_.orientation_count();
  const int block = config_.split_polarity && e.p == events::Polarity::Off ? 1 : 0;
  for (int s = 0; s < bank_.scale_count(); ++s) {
    for (int o = 0; o < bank_.orientation_count(); ++o) {
      const GaborKernel& k = bank_.kernel(s, o);
      const int map = block * per_block + s * bank_.orientation_count() + o;
      const int h = k.half_width();
      const int x0 = std::max(1, e.x - h), x1 = std::min(geometry_.width, e.x + h);
      const int y0 = std::max(1, e.y - h), y1 = std::min(geometry_.height, e.y + h);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          Cell& c = cell(map, x, y);
          if (c.t != e.t) {
            c.v *= std::exp(-static_cast<double>(e.t - c.t) * inv_tau_us_);
            c.t = e.t;
          }
          c.v += k.at(x - e.x, y - e.y);
        }
      }
      // Raster scan; the first neuron over threshold claims its unit.
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          if (cell(map, x, y).v > config_.threshold) {
            const int ux = (x - 1) / 2, uy = (y - 1) / 2;
            out.push_back({static_cast<std::uint16_t>(map), static_cast<std::uint16_t>(ux),
                           static_cast<std::uint16_t>(uy), e.t});
            reset_unit(map, ux, uy, e.t);
          }
        }
      }
    }
  }
}

std::vector<FeatureSpike> S1Layer::process(const events::Event& event) {
  std::vector<FeatureSpike> out;
  process(event, out);
  return out;
}

double S1Layer::voltage(int map, int x, int y, Microseconds t) const {
  if (map < 0 || map >= layout_.maps || !geometry_.contains(x, y)) throw RangeError("S1 neuron index out of range");
  const Cell& c = cell(map, x, y);
  if (t < c.t) throw OrderingError("voltage query before the neuron's last update");
  return c.v * std::exp(-static_cast<double>(t - c.t) * inv_tau_us_);
}

std::vector<FeatureSpike> extract_features(const events::EventStream& stream, const GaborBank& bank,
                                           const S1Config& config) {
  std::vector<FeatureSpike> out;
  if (stream.events.empty()) return out;
  S1Layer layer(bank, stream.geometry, config);
  for (const events::Event& e : stream.events) layer.process(e, out);
  return out;
}

std::string feature_spikes_to_text(const std::vector<FeatureSpike>& spikes, const FeatureLayout& layout,
                                   Microseconds duration) {
  std::ostringstream os;
  os << "AER1 " << layout.units_x << ' ' << layout.units_y << ' ' << duration << '\n';
  for (const FeatureSpike& s : spikes) os << s.ux + 1 << ' ' << s.uy + 1 << ' ' << s.t << ' ' << s.map << '\n';
  return os.str();
}

}  // namespace spikestream::gabor
