#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace spikestream {

// Decision-layer synapses. Rows are decision neurons ordered class-major
// (neuron = class * population + member), columns are afferents.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  WeightMatrix(int classes, int population, int afferents, double value = 0.0);

  int classes() const { return classes_; }
  int population() const { return population_; }
  int afferents() const { return afferents_; }
  int neurons() const { return classes_ * population_; }

  std::span<double> row(int neuron) {
    return {data_.data() + static_cast<std::size_t>(neuron) * afferents_, static_cast<std::size_t>(afferents_)};
  }
  std::span<const double> row(int neuron) const {
    return {data_.data() + static_cast<std::size_t>(neuron) * afferents_, static_cast<std::size_t>(afferents_)};
  }
  double& at(int neuron, int afferent) { return data_[static_cast<std::size_t>(neuron) * afferents_ + afferent]; }
  double at(int neuron, int afferent) const { return data_[static_cast<std::size_t>(neuron) * afferents_ + afferent]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const WeightMatrix&, const WeightMatrix&) = default;

 private:
  int classes_ = 0;
  int population_ = 0;
  int afferents_ = 0;
  std::vector<double> data_;
};

// Binary weights file:
//   "SPKW" | u32 version | u32 classes | u32 population | u32 afferents |
//   f64 tau_m_ms | f64 search_range_ms | f64[neurons * afferents] row-major
// all little-endian. A JSON sidecar (<path>.json) carries the remaining metadata.
inline constexpr std::uint32_t kWeightsVersion = 1;

struct WeightsHeader {
  std::uint32_t version = kWeightsVersion;
  double tau_m_ms = 0.0;
  double search_range_ms = 0.0;
};

std::string encode_weights(const WeightMatrix& weights, const WeightsHeader& header);
WeightMatrix decode_weights(std::string_view bytes, WeightsHeader* header = nullptr);

void write_weights(const std::filesystem::path& path, const WeightMatrix& weights, const WeightsHeader& header,
                   const std::string& sidecar_json);
WeightMatrix read_weights(const std::filesystem::path& path, WeightsHeader* header = nullptr);
std::filesystem::path sidecar_path(const std::filesystem::path& weights_path);

}  // namespace spikestream
