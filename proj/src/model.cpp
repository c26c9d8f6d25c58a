#include "spikestream/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "spikestream/errors.hpp"

namespace spikestream {
namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'W'};
constexpr std::size_t kHeaderBytes = 4 + 4 * 4 + 8 * 2;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f64(std::string& out, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t get_le(const unsigned char* p, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

WeightMatrix::WeightMatrix(int classes, int population, int afferents, double value)
    : classes_(classes), population_(population), afferents_(afferents) {
  if (classes < 1 || population < 1 || afferents < 0) throw ShapeError("weight matrix needs classes >= 1 and population >= 1");
  data_.assign(static_cast<std::size_t>(classes) * population * afferents, value);
}

std::string encode_weights(const WeightMatrix& w, const WeightsHeader& header) {
  std::string out(kMagic, 4);
  put_u32(out, header.version);
  put_u32(out, static_cast<std::uint32_t>(w.classes()));
  put_u32(out, static_cast<std::uint32_t>(w.population()));
  put_u32(out, static_cast<std::uint32_t>(w.afferents()));
  put_f64(out, header.tau_m_ms);
  put_f64(out, header.search_range_ms);
  out.reserve(out.size() + w.data().size() * 8);
  for (double d : w.data()) put_f64(out, d);
  return out;
}

WeightMatrix decode_weights(std::string_view bytes, WeightsHeader* header) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw ParseError("not a weights file", 0);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  WeightsHeader h;
  h.version = static_cast<std::uint32_t>(get_le(p + 4, 4));
  if (h.version != kWeightsVersion) throw ParseError("unsupported weights version " + std::to_string(h.version), 4);
  auto classes = static_cast<std::uint32_t>(get_le(p + 8, 4));
  auto population = static_cast<std::uint32_t>(get_le(p + 12, 4));
  auto afferents = static_cast<std::uint32_t>(get_le(p + 16, 4));
  h.tau_m_ms = std::bit_cast<double>(get_le(p + 20, 8));
  h.search_range_ms = std::bit_cast<double>(get_le(p + 28, 8));
  if (classes == 0 || population == 0 || classes > (1u << 16) || population > (1u << 16) || afferents > (1u << 28))
    throw ParseError("implausible weights dimensions", 8);
  const std::size_t count = static_cast<std::size_t>(classes) * population * afferents;
  if (bytes.size() != kHeaderBytes + count * 8)
    throw ParseError("weights body size does not match header", kHeaderBytes);
  WeightMatrix w(static_cast<int>(classes), static_cast<int>(population), static_cast<int>(afferents));
  for (std::size_t i = 0; i < count; ++i) w.data()[i] = std::bit_cast<double>(get_le(p + kHeaderBytes + 8 * i, 8));
  if (header) *header = h;
  return w;
}

std::filesystem::path sidecar_path(const std::filesystem::path& weights_path) {
  auto p = weights_path;
  p += ".json";
  return p;
}

void write_weights(const std::filesystem::path& path, const WeightMatrix& weights, const WeightsHeader& header,
                   const std::string& sidecar_json) {
  std::string bytes = encode_weights(weights, header);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write weights file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream meta(sidecar_path(path));
  if (!meta) throw Error("cannot write weights sidecar " + sidecar_path(path).string());
  meta << sidecar_json;
  if (!out || !meta) throw Error("write failed for " + path.string());
}

WeightMatrix read_weights(const std::filesystem::path& path, WeightsHeader* header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weights file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes, header);
}

}  // namespace spikestream
