#include "spikestream/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace spikestream {

std::vector<snn::AfferentSpike> to_afferent_spikes(const std::vector<gabor::FeatureSpike>& spikes,
                                                   const gabor::FeatureLayout& layout) {
  std::vector<snn::AfferentSpike> out;
  out.reserve(spikes.size());
  for (const auto& s : spikes)
    out.push_back({events::to_ms(s.t), static_cast<std::uint32_t>(layout.afferent(s))});
  return out;
}

spa::LabeledFeatures featurize(const events::EventStream& stream, const gabor::GaborBank& bank,
                               const gabor::S1Config& s1) {
  spa::LabeledFeatures f;
  f.duration_ms = events::to_ms(stream.duration);
  f.label = stream.label.value_or(0);
  if (stream.events.empty()) return f;
  auto layout = gabor::FeatureLayout::of(bank, stream.geometry, s1);
  f.spikes = to_afferent_spikes(gabor::extract_features(stream, bank, s1), layout);
  return f;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<long>(threads, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<spa::LabeledFeatures> featurize_all(const std::vector<events::EventStream>& streams,
                                                const gabor::GaborBank& bank, const gabor::S1Config& s1,
                                                int threads) {
  std::vector<spa::LabeledFeatures> out(streams.size());
  parallel_for(streams.size(), threads, [&](std::size_t i) { out[i] = featurize(streams[i], bank, s1); });
  return out;
}

}  // namespace spikestream
