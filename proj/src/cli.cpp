#include "spikestream/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spikestream/errors.hpp"
#include "spikestream/event_io.hpp"
#include "spikestream/model.hpp"
#include "spikestream/pipeline.hpp"
#include "spikestream/readout.hpp"
#include "spikestream/synthetic.hpp"
#include "spikestream/version.hpp"

namespace spikestream::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw Error("cannot open manifest " + manifest.string());
  const fs::path base = manifest.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string path;
    if (!(ls >> path)) continue;
    ManifestEntry e;
    std::string extra;
    if (!(ls >> e.label) || (ls >> extra))
      throw ParameterError(manifest.string() + ":" + std::to_string(line_no) + ": expected 'path label'");
    if (e.label < 0) throw RangeError(manifest.string() + ":" + std::to_string(line_no) + ": negative label");
    e.path = fs::path(path).is_absolute() ? fs::path(path) : base / path;
    entries.push_back(std::move(e));
  }
  return entries;
}

std::string provenance(const config::RunConfig& config) {
  return std::string("spikestream ") + kVersion + " config " + config::config_hash(config);
}

namespace {

struct ConfigArgs {
  std::string config_path;
  std::string preset;
};

void add_config_flags(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.config_path, "Config file (INI sections)")->check(CLI::ExistingFile);
  cmd->add_option("--preset", args.preset, "mnist-dvs, nmnist or cards")->excludes("--config");
}

config::RunConfig resolve(const ConfigArgs& args, const std::optional<std::string>& fallback_text = std::nullopt) {
  if (!args.config_path.empty()) return config::load_config(args.config_path);
  if (!args.preset.empty()) return config::preset(args.preset);
  if (fallback_text) return config::parse_config(*fallback_text);
  return config::RunConfig{};
}

std::vector<events::EventStream> load_streams(const std::vector<ManifestEntry>& entries) {
  std::vector<events::EventStream> streams;
  streams.reserve(entries.size());
  for (const auto& e : entries) {
    auto s = events::read_stream_file(e.path, events::format_from_path(e.path));
    s.label = e.label;
    streams.push_back(std::move(s));
  }
  return streams;
}

events::Geometry common_geometry(const std::vector<events::EventStream>& streams) {
  const auto g = streams.front().geometry;
  for (std::size_t i = 1; i < streams.size(); ++i)
    if (!(streams[i].geometry == g))
      throw GeometryError("stream " + std::to_string(i) + " is " + std::to_string(streams[i].geometry.width) + "x" +
                          std::to_string(streams[i].geometry.height) + ", expected " + std::to_string(g.width) +
                          "x" + std::to_string(g.height));
  return g;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// ---- generate ----

struct GenerateArgs {
  events::DatasetSpec spec;
  double duration_ms = 30.0;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string format = "text";
  std::string concat;
  int concat_segments = 0;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  events::DatasetSpec spec = a.spec;
  spec.duration = static_cast<events::Microseconds>(std::llround(a.duration_ms * 1000.0));
  const auto format = events::format_from_name(a.format);
  if (format == events::StreamFormat::NmnistBin) throw CapabilityError("nmnist-bin is a read-only format");
  const std::string ext = format == events::StreamFormat::Text ? ".aer" : ".aerb";

  std::ostringstream params;
  params << std::setprecision(17) << "classes=" << spec.classes << " per_class=" << spec.per_class
         << " geometry=" << spec.geometry.width << "x" << spec.geometry.height << " duration_us=" << spec.duration
         << " velocity=" << spec.velocity_px_per_ms << " velocity_jitter=" << spec.velocity_jitter
         << " noise=" << spec.noise_rate_per_ms << " bar_width=" << spec.bar_width_px
         << " spacing=" << spec.spacing_px << " jitter_us=" << spec.timing_jitter_us << " seed=" << a.seed;
  const std::string header = std::string("# spikestream ") + kVersion + " config " + config::fnv1a_hex(params.str());

  auto streams = events::generate_dataset(spec, a.seed);
  const fs::path dir(a.out_dir);
  fs::create_directories(dir);
  auto manifest = open_output(dir / "manifest.txt");
  manifest << header << "\n# " << params.str() << '\n';
  std::vector<int> index(static_cast<std::size_t>(spec.classes), 0);
  for (const auto& s : streams) {
    const int label = *s.label;
    std::ostringstream name;
    name << "sample_c" << label << '_' << std::setw(4) << std::setfill('0') << index[label]++ << ext;
    events::write_stream_file(dir / name.str(), s, format);
    manifest << name.str() << ' ' << label << '\n';
  }
  if (!manifest) throw Error("write failed for manifest");

  if (!a.concat.empty()) {
    // Round-robin over classes so consecutive segments always change class.
    const int segments = a.concat_segments > 0 ? a.concat_segments : spec.classes * spec.per_class;
    std::vector<events::EventStream> parts;
    for (int k = 0; k < segments && spec.per_class > 0; ++k) {
      const int c = k % spec.classes;
      const int i = (k / spec.classes) % spec.per_class;
      parts.push_back(streams[static_cast<std::size_t>(c * spec.per_class + i)]);
    }
    std::vector<events::StreamSpan> spans;
    auto joined = events::concatenate(parts, &spans);
    joined.label.reset();
    const fs::path concat(a.concat);
    events::write_stream_file(concat, joined, events::format_from_path(concat));
    auto truth = open_output(fs::path(a.concat + ".spans"));
    truth << header << "\n# begin_us end_us label\n";
    for (const auto& sp : spans) truth << sp.begin << ' ' << sp.end << ' ' << sp.label << '\n';
  }
  out << "wrote " << streams.size() << " streams to " << dir.string() << '\n';
  return kSuccess;
}

// ---- train ----

struct TrainArgs {
  ConfigArgs config;
  std::string manifest;
  std::string weights_out = "weights.spkw";
  std::string loss_log;
  std::optional<double> lr;
  std::optional<int> iters;
  std::optional<int> population;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto cfg = resolve(a.config);
  if (a.lr) cfg.spa.learning_rate = *a.lr;
  if (a.iters) cfg.spa.iterations = *a.iters;
  if (a.population) cfg.spa.population = *a.population;
  if (a.seed) cfg.spa.seed = *a.seed;

  const auto entries = read_manifest(a.manifest);
  if (entries.empty()) throw ParameterError("manifest " + a.manifest + " lists no samples");
  auto streams = load_streams(entries);
  cfg.geometry = common_geometry(streams);
  int classes = 0;
  for (const auto& e : entries) classes = std::max(classes, e.label + 1);
  if (classes < 2) throw ParameterError("training needs at least 2 classes, manifest has " + std::to_string(classes));
  cfg.spa.classes = classes;
  cfg.validate();

  const auto bank = gabor::GaborBank::build(cfg.gabor);
  const auto s1 = cfg.s1_config();
  const auto layout = gabor::FeatureLayout::of(bank, cfg.geometry, s1);
  const auto kernel = cfg.kernel();
  const auto features = featurize_all(streams, bank, s1, a.threads);
  const auto result = spa::spa_train(features, layout.afferent_count(), kernel, cfg.spa);

  const std::string prov = provenance(cfg);
  const double final_loss = result.iteration_loss.empty() ? 0.0 : result.iteration_loss.back();
  json meta;
  meta["provenance"] = prov;
  meta["version"] = kVersion;
  meta["config_hash"] = config::config_hash(cfg);
  meta["config"] = config::to_text(cfg);
  meta["classes"] = classes;
  meta["population"] = cfg.spa.population;
  meta["afferents"] = layout.afferent_count();
  meta["geometry"] = {cfg.geometry.width, cfg.geometry.height};
  meta["samples"] = features.size();
  meta["skipped"] = result.skipped;
  meta["iterations_run"] = result.iterations_run;
  meta["iteration_loss"] = result.iteration_loss;
  write_weights(a.weights_out, result.weights, {kWeightsVersion, cfg.tau_m_ms, cfg.spa.search_range_ms},
                meta.dump(2) + "\n");

  {
    auto log = open_output(a.loss_log.empty() ? a.weights_out + ".loss" : a.loss_log);
    log << "# " << prov << "\n# iteration sample segment t_start_ms loss p_true predicted class_peak_ms...\n";
    log << std::setprecision(10);
    for (const auto& r : result.records) {
      log << r.iteration << ' ' << r.sample << ' ' << r.segment << ' ' << r.t_start << ' ' << r.loss << ' '
          << r.p_true << ' ' << r.predicted;
      for (double t : r.class_peak_times) log << ' ' << t;
      log << '\n';
    }
  }

  out << "# " << prov << '\n';
  for (std::size_t i = 0; i < result.iteration_loss.size(); ++i)
    out << "iteration " << i << " loss " << std::setprecision(8) << result.iteration_loss[i] << '\n';
  if (!result.skipped.empty()) out << "skipped " << result.skipped.size() << " samples without feature spikes\n";
  out << "final loss " << std::setprecision(8) << final_loss << '\n';
  out << "weights written to " << a.weights_out << '\n';
  return kSuccess;
}

// ---- eval / stream shared ----

struct LoadedModel {
  config::RunConfig cfg;
  WeightMatrix weights;
};

LoadedModel load_model(const std::string& weights_path, const ConfigArgs& config_args) {
  if (!fs::exists(weights_path)) throw Error("weights file not found: " + weights_path);
  WeightsHeader header;
  LoadedModel m;
  m.weights = read_weights(weights_path, &header);
  std::optional<std::string> trained_config;
  if (std::ifstream meta(sidecar_path(weights_path)); meta) {
    try {
      auto j = json::parse(meta);
      if (j.contains("config")) trained_config = j["config"].get<std::string>();
    } catch (const json::exception& e) {
      throw ParameterError("malformed weights sidecar " + sidecar_path(weights_path).string() + ": " + e.what());
    }
  }
  m.cfg = resolve(config_args, trained_config);
  if (m.cfg.tau_m_ms != header.tau_m_ms || m.cfg.spa.search_range_ms != header.search_range_ms) {
    std::ostringstream os;
    os << "weights were trained with tau_m " << header.tau_m_ms << " ms and search range " << header.search_range_ms
       << " ms; the config has " << m.cfg.tau_m_ms << " and " << m.cfg.spa.search_range_ms;
    throw ParameterError(os.str());
  }
  m.cfg.spa.classes = m.weights.classes();
  m.cfg.spa.population = m.weights.population();
  return m;
}

struct EvalArgs {
  ConfigArgs config;
  std::string manifest;
  std::string weights;
  std::optional<double> truncate_ms;
  std::string json_out;
  bool no_latency = false;
  int threads = 1;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto model = load_model(a.weights, a.config);
  const auto entries = read_manifest(a.manifest);
  if (entries.empty()) throw ParameterError("manifest " + a.manifest + " lists no samples");
  auto streams = load_streams(entries);
  if (a.truncate_ms) {
    if (*a.truncate_ms < 0) throw ParameterError("--truncate-ms must be non-negative");
    const auto limit = static_cast<events::Microseconds>(std::llround(*a.truncate_ms * 1000.0));
    for (auto& s : streams) s = events::truncate(s, limit);
  }
  const auto& cfg = model.cfg;
  const auto bank = gabor::GaborBank::build(cfg.gabor);
  readout::EvalOptions options;
  options.streaming_latency = !a.no_latency;
  options.threads = a.threads;
  const auto report = readout::evaluate(streams, bank, cfg.s1_config(), model.weights, cfg.kernel(), cfg.inference,
                                        cfg.stream_window_ms(), options);

  const std::string prov = provenance(cfg);
  auto j = json::parse(report.to_json());
  j["provenance"] = prov;
  if (a.truncate_ms) j["truncate_ms"] = *a.truncate_ms;
  out << "# " << prov << '\n' << report.to_text();
  if (a.json_out.empty()) {
    out << '\n' << j.dump(2) << '\n';
  } else {
    auto f = open_output(a.json_out);
    f << j.dump(2) << '\n';
  }
  return kSuccess;
}

struct StreamArgs {
  ConfigArgs config;
  std::string input;
  std::string format;
  std::string weights;
  std::optional<double> period_ms;
  std::optional<double> window_ms;
  std::string out_path;
};

int cmd_stream(const StreamArgs& a, std::ostream& out) {
  auto model = load_model(a.weights, a.config);
  auto& cfg = model.cfg;
  if (a.period_ms) cfg.inference.period_ms = *a.period_ms;
  if (a.window_ms) cfg.inference.window_ms = *a.window_ms;
  cfg.inference.validate();
  const auto format = a.format.empty() ? events::format_from_path(a.input) : events::format_from_name(a.format);
  const auto stream = events::read_stream_file(a.input, format);
  const auto bank = gabor::GaborBank::build(cfg.gabor);
  const auto decisions = readout::classify_stream(stream, bank, cfg.s1_config(), model.weights, cfg.kernel(),
                                                  cfg.inference, cfg.stream_window_ms());

  std::ostringstream trace;
  trace << "# " << provenance(cfg) << "\n# time_ms predicted class_rates...\n" << readout::decision_trace_text(decisions);
  if (a.out_path.empty()) {
    out << trace.str();
  } else {
    auto f = open_output(a.out_path);
    f << trace.str();
  }
  return kSuccess;
}

int cmd_config(const ConfigArgs& a, std::ostream& out) {
  const auto cfg = resolve(a);
  cfg.validate();
  out << "# " << provenance(cfg) << '\n' << config::to_text(cfg);
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-stream classification with Gabor features and a segmented spiking readout", "spikestream"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a labeled synthetic moving-pattern dataset");
  g->add_option("--classes", gen.spec.classes, "Number of classes (1-6)")->capture_default_str();
  g->add_option("--per-class", gen.spec.per_class, "Samples per class")->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--out", gen.out_dir, "Output directory")->required();
  g->add_option("--format", gen.format, "text or packed-binary")->capture_default_str();
  g->add_option("--duration-ms", gen.duration_ms)->capture_default_str();
  g->add_option("--width", gen.spec.geometry.width)->capture_default_str();
  g->add_option("--height", gen.spec.geometry.height)->capture_default_str();
  g->add_option("--velocity", gen.spec.velocity_px_per_ms, "Drift speed in px/ms")->capture_default_str();
  g->add_option("--velocity-jitter", gen.spec.velocity_jitter)->capture_default_str();
  g->add_option("--noise", gen.spec.noise_rate_per_ms, "Background events per ms")->capture_default_str();
  g->add_option("--bar-width", gen.spec.bar_width_px)->capture_default_str();
  g->add_option("--spacing", gen.spec.spacing_px)->capture_default_str();
  g->add_option("--jitter-us", gen.spec.timing_jitter_us)->capture_default_str();
  g->add_option("--concat", gen.concat, "Also write one concatenated stream (plus <file>.spans)");
  g->add_option("--concat-segments", gen.concat_segments, "Samples in the concatenated stream");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Extract features and train the decision layer");
  add_config_flags(t, tr.config);
  t->add_option("--manifest", tr.manifest)->required()->check(CLI::ExistingFile);
  t->add_option("--weights-out", tr.weights_out)->capture_default_str();
  t->add_option("--loss-log", tr.loss_log, "Per-segment loss log (default <weights-out>.loss)");
  t->add_option("--lr", tr.lr, "Learning rate");
  t->add_option("--iters", tr.iters, "Training iterations");
  t->add_option("--population", tr.population, "Neurons per class");
  t->add_option("--seed", tr.seed);
  t->add_option("--threads", tr.threads)->capture_default_str()->check(CLI::PositiveNumber);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Classify a labeled manifest and report accuracy");
  add_config_flags(e, ev.config);
  e->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  e->add_option("--weights", ev.weights)->required();
  e->add_option("--truncate-ms", ev.truncate_ms, "Only use the first T ms of each recording");
  e->add_option("--json", ev.json_out, "Write the JSON report here instead of stdout");
  e->add_flag("--no-latency", ev.no_latency, "Skip the streaming latency measurement");
  e->add_option("--threads", ev.threads)->capture_default_str()->check(CLI::PositiveNumber);

  StreamArgs st;
  auto* s = app.add_subcommand("stream", "Emit periodic decisions for one event stream");
  add_config_flags(s, st.config);
  s->add_option("input", st.input, "Event stream file")->required()->check(CLI::ExistingFile);
  s->add_option("--format", st.format, "Override the extension-based format");
  s->add_option("--weights", st.weights)->required();
  s->add_option("--period-ms", st.period_ms, "Decision period (default 5)");
  s->add_option("--window-ms", st.window_ms, "Trailing count window (default: search range)");
  s->add_option("--out", st.out_path, "Trace file (default stdout)");

  ConfigArgs cf;
  auto* c = app.add_subcommand("config", "Print the resolved configuration");
  add_config_flags(c, cf);

  std::vector<std::string> rev(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) {
      // --help / --version
      std::ostringstream o, x;
      app.exit(pe, o, x);
      out << o.str() << x.str();
      return kSuccess;
    }
    std::ostringstream o, x;
    app.exit(pe, o, x);
    err << o.str() << x.str();
    return kUsageError;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (s->parsed()) return cmd_stream(st, out);
    if (c->parsed()) return cmd_config(cf, out);
  } catch (const DivergenceError& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntimeError;
  } catch (const Error& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsageError;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntimeError;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}

int run(int argc, const char* const* argv) {
  return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace spikestream::cli
