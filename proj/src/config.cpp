#include "spikestream/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "spikestream/errors.hpp"

namespace spikestream::config {
namespace pt = boost::property_tree;

namespace {

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ParameterError("config key '" + key + "' has malformed list entry '" + item + "'");
    }
  }
  return out;
}

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  auto node = tree.get_optional<std::string>(key);
  if (!node) return fallback;
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (*node == "true" || *node == "1" || *node == "yes") return true;
      if (*node == "false" || *node == "0" || *node == "no") return false;
      throw std::invalid_argument(*node);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return *node;
    } else {
      return pt::ptree(*node).get_value<T>();
    }
  } catch (const std::exception&) {
    throw ParameterError("config key '" + key + "' has malformed value '" + *node + "'");
  }
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "preset",
      "data.width", "data.height", "data.format",
      "gabor.gamma", "gabor.sizes", "gabor.sigmas", "gabor.wavelengths", "gabor.orientations",
      "gabor.split_polarity",
      "s1.tau_ms", "s1.threshold", "s1.reset",
      "kernel.tau_m_ms", "kernel.tau_ratio",
      "spa.learning_rate", "spa.search_range_ms", "spa.iterations", "spa.classes", "spa.population",
      "spa.init_low", "spa.init_high", "spa.seed", "spa.shuffle", "spa.early_stop", "spa.plateau_tolerance",
      "spa.plateau_window",
      "inference.threshold", "inference.reset", "inference.period_ms", "inference.window_ms"};
  return keys;
}

void check_keys(const pt::ptree& tree, const std::string& prefix = "") {
  for (const auto& [name, child] : tree) {
    const std::string key = prefix.empty() ? name : prefix + "." + name;
    if (child.empty()) {
      if (!known_keys().count(key)) throw ParameterError("unknown config key '" + key + "'");
    } else {
      check_keys(child, key);
    }
  }
}

}  // namespace

gabor::S1Config RunConfig::s1_config() const {
  gabor::S1Config c = s1;
  c.tau_ms = s1_tau_ms.value_or(tau_m_ms);
  return c;
}

void RunConfig::validate() const {
  if (geometry.empty()) throw ParameterError("geometry must be non-empty");
  gabor.validate();
  s1_config().validate();
  kernel();
  spa.validate();
  inference.validate();
}

void apply_preset(RunConfig& c, std::string_view name) {
  double length = 0;
  if (name == "mnist-dvs") length = 80.0;
  else if (name == "nmnist") length = 120.0;
  else if (name == "cards") length = 8.0;
  else throw ParameterError("unknown preset '" + std::string(name) + "' (mnist-dvs, nmnist, cards)");
  c.preset = std::string(name);
  c.tau_m_ms = length;
  c.spa.search_range_ms = length;
  if (name == "nmnist") c.geometry = {34, 34};
  else if (name == "mnist-dvs") c.geometry = {128, 128};
  else c.geometry = {32, 32};
}

RunConfig preset(std::string_view name) {
  RunConfig c;
  apply_preset(c, name);
  return c;
}

RunConfig parse_config(std::string_view text) {
  pt::ptree tree;
  std::istringstream in{std::string(text)};
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParameterError(std::string("config: ") + e.what());
  }
  check_keys(tree);

  RunConfig c = preset(get<std::string>(tree, "preset", "mnist-dvs"));
  c.geometry.width = get(tree, "data.width", c.geometry.width);
  c.geometry.height = get(tree, "data.height", c.geometry.height);
  if (auto f = tree.get_optional<std::string>("data.format")) c.format = events::format_from_name(*f);

  c.gabor.gamma = get(tree, "gabor.gamma", c.gabor.gamma);
  if (tree.get_optional<std::string>("gabor.sizes") || tree.get_optional<std::string>("gabor.sigmas") ||
      tree.get_optional<std::string>("gabor.wavelengths")) {
    auto sizes = parse_list("gabor.sizes", get<std::string>(tree, "gabor.sizes", ""));
    auto sigmas = parse_list("gabor.sigmas", get<std::string>(tree, "gabor.sigmas", ""));
    auto waves = parse_list("gabor.wavelengths", get<std::string>(tree, "gabor.wavelengths", ""));
    if (sizes.size() != sigmas.size() || sizes.size() != waves.size())
      throw ParameterError("gabor sizes, sigmas and wavelengths must have equal length");
    c.gabor.scales.clear();
    for (std::size_t i = 0; i < sizes.size(); ++i)
      c.gabor.scales.push_back({static_cast<int>(sizes[i]), sigmas[i], waves[i]});
  }
  if (auto o = tree.get_optional<std::string>("gabor.orientations")) c.gabor.orientations_deg = parse_list("gabor.orientations", *o);
  c.s1.split_polarity = get(tree, "gabor.split_polarity", c.s1.split_polarity);

  if (auto t = tree.get_optional<std::string>("s1.tau_ms")) c.s1_tau_ms = get(tree, "s1.tau_ms", 0.0);
  c.s1.threshold = get(tree, "s1.threshold", c.s1.threshold);
  c.s1.reset = get(tree, "s1.reset", c.s1.reset);

  c.tau_m_ms = get(tree, "kernel.tau_m_ms", c.tau_m_ms);
  c.tau_ratio = get(tree, "kernel.tau_ratio", c.tau_ratio);

  c.spa.learning_rate = get(tree, "spa.learning_rate", c.spa.learning_rate);
  c.spa.search_range_ms = get(tree, "spa.search_range_ms", c.spa.search_range_ms);
  c.spa.iterations = get(tree, "spa.iterations", c.spa.iterations);
  c.spa.classes = get(tree, "spa.classes", c.spa.classes);
  c.spa.population = get(tree, "spa.population", c.spa.population);
  c.spa.init_low = get(tree, "spa.init_low", c.spa.init_low);
  c.spa.init_high = get(tree, "spa.init_high", c.spa.init_high);
  c.spa.seed = get<std::uint64_t>(tree, "spa.seed", c.spa.seed);
  c.spa.shuffle = get(tree, "spa.shuffle", c.spa.shuffle);
  c.spa.early_stop = get(tree, "spa.early_stop", c.spa.early_stop);
  c.spa.plateau_tolerance = get(tree, "spa.plateau_tolerance", c.spa.plateau_tolerance);
  c.spa.plateau_window = get(tree, "spa.plateau_window", c.spa.plateau_window);

  c.inference.threshold = get(tree, "inference.threshold", c.inference.threshold);
  c.inference.reset = get(tree, "inference.reset", c.inference.reset);
  c.inference.period_ms = get(tree, "inference.period_ms", c.inference.period_ms);
  c.inference.window_ms = get(tree, "inference.window_ms", c.inference.window_ms);
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text);
}

std::string to_text(const RunConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << "preset = " << c.preset << "\n\n";
  os << "[data]\nwidth = " << c.geometry.width << "\nheight = " << c.geometry.height
     << "\nformat = " << events::format_name(c.format) << "\n\n";
  os << "[gabor]\n" << gabor::to_config_text(c.gabor) << "split_polarity = " << b(c.s1.split_polarity) << "\n\n";
  os << "[s1]\n";
  if (c.s1_tau_ms) os << "tau_ms = " << *c.s1_tau_ms << '\n';
  os << "threshold = " << c.s1.threshold << "\nreset = " << c.s1.reset << "\n\n";
  os << "[kernel]\ntau_m_ms = " << c.tau_m_ms << "\ntau_ratio = " << c.tau_ratio << "\n\n";
  os << "[spa]\nlearning_rate = " << c.spa.learning_rate << "\nsearch_range_ms = " << c.spa.search_range_ms
     << "\niterations = " << c.spa.iterations << "\nclasses = " << c.spa.classes
     << "\npopulation = " << c.spa.population << "\ninit_low = " << c.spa.init_low
     << "\ninit_high = " << c.spa.init_high << "\nseed = " << c.spa.seed << "\nshuffle = " << b(c.spa.shuffle)
     << "\nearly_stop = " << b(c.spa.early_stop) << "\nplateau_tolerance = " << c.spa.plateau_tolerance
     << "\nplateau_window = " << c.spa.plateau_window << "\n\n";
  os << "[inference]\nthreshold = " << c.inference.threshold << "\nreset = " << c.inference.reset
     << "\nperiod_ms = " << c.inference.period_ms << "\nwindow_ms = " << c.inference.window_ms << '\n';
  return os.str();
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string config_hash(const RunConfig& c) { return fnv1a_hex(to_text(c)); }

}  // namespace spikestream::config
