#pragma once

#include <functional>
#include <vector>

#include "spikestream/event.hpp"
#include "spikestream/gabor.hpp"
#include "spikestream/snn.hpp"
#include "spikestream/spa.hpp"

namespace spikestream {

std::vector<snn::AfferentSpike> to_afferent_spikes(const std::vector<gabor::FeatureSpike>& spikes,
                                                   const gabor::FeatureLayout& layout);

// Feature extraction for one labeled stream. Streams without a label get label 0.
spa::LabeledFeatures featurize(const events::EventStream& stream, const gabor::GaborBank& bank,
                               const gabor::S1Config& s1);

// Runs featurize over many streams on up to `threads` workers; output order matches input.
std::vector<spa::LabeledFeatures> featurize_all(const std::vector<events::EventStream>& streams,
                                                const gabor::GaborBank& bank, const gabor::S1Config& s1,
                                                int threads = 1);

// Calls fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace spikestream
