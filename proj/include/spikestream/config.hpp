#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "spikestream/event_io.hpp"
#include "spikestream/gabor.hpp"
#include "spikestream/readout.hpp"
#include "spikestream/snn.hpp"
#include "spikestream/spa.hpp"

namespace spikestream::config {

// Everything a train/eval/stream run needs, with the published defaults.
struct RunConfig {
  std::string preset = "mnist-dvs";
  events::Geometry geometry{32, 32};
  events::StreamFormat format = events::StreamFormat::Text;

  gabor::GaborParams gabor;
  gabor::S1Config s1;
  // S1 decay follows the PSP membrane constant unless set explicitly.
  std::optional<double> s1_tau_ms;

  double tau_m_ms = 80.0;
  double tau_ratio = snn::PspKernel::kDefaultRatio;
  spa::SpaConfig spa;
  readout::InferenceConfig inference;

  snn::PspKernel kernel() const { return snn::PspKernel(tau_m_ms, tau_ratio); }
  gabor::S1Config s1_config() const;
  double stream_window_ms() const { return inference.window_ms > 0 ? inference.window_ms : spa.search_range_ms; }

  void validate() const;
};

// Names: mnist-dvs (80 ms), nmnist (120 ms), cards (8 ms). tau_m and the search
// range are both set to the preset length.
RunConfig preset(std::string_view name);
void apply_preset(RunConfig& config, std::string_view name);

// Flat "key = value" text with [sections]; unknown keys are rejected.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string to_text(const RunConfig& config);

// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view text);
std::string config_hash(const RunConfig& config);

}  // namespace spikestream::config
