#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "spikestream/config.hpp"
#include "spikestream/errors.hpp"
#include "spikestream/event_io.hpp"
#include "spikestream/model.hpp"
#include "spikestream/pipeline.hpp"
#include "spikestream/readout.hpp"
#include "spikestream/snn.hpp"
#include "spikestream/spa.hpp"
#include "spikestream/synthetic.hpp"
#include "spikestream/version.hpp"

namespace py = pybind11;
using namespace spikestream;

namespace {

events::StreamFormat fmt(const std::string& name) { return events::format_from_name(name); }

void bind_events(py::module_& m) {
  py::class_<events::Geometry>(m, "Geometry")
      .def(py::init<int, int>(), py::arg("width"), py::arg("height"))
      .def_readwrite("width", &events::Geometry::width)
      .def_readwrite("height", &events::Geometry::height)
      .def("__eq__", [](const events::Geometry& a, const events::Geometry& b) { return a == b; })
      .def("__repr__", [](const events::Geometry& g) {
        return "Geometry(" + std::to_string(g.width) + ", " + std::to_string(g.height) + ")";
      });

  py::class_<events::Event>(m, "Event")
      .def(py::init([](int x, int y, std::int64_t t, int p) {
             if (p != 1 && p != -1) throw ParameterError("polarity must be +1 or -1");
             return events::Event{static_cast<std::uint16_t>(x), static_cast<std::uint16_t>(y), t,
                                  static_cast<events::Polarity>(p)};
           }),
           py::arg("x"), py::arg("y"), py::arg("t"), py::arg("p") = 1)
      .def_readwrite("x", &events::Event::x)
      .def_readwrite("y", &events::Event::y)
      .def_readwrite("t", &events::Event::t)
      .def_property_readonly("p", [](const events::Event& e) { return static_cast<int>(e.p); })
      .def("__eq__", [](const events::Event& a, const events::Event& b) { return a == b; })
      .def("__repr__", [](const events::Event& e) {
        return "Event(" + std::to_string(e.x) + ", " + std::to_string(e.y) + ", " + std::to_string(e.t) + ", " +
               std::to_string(static_cast<int>(e.p)) + ")";
      });

  py::class_<events::EventStream>(m, "EventStream")
      .def(py::init<>())
      .def_readwrite("geometry", &events::EventStream::geometry)
      .def_readwrite("events", &events::EventStream::events)
      .def_readwrite("label", &events::EventStream::label)
      .def_readwrite("duration", &events::EventStream::duration)
      .def("validate", &events::EventStream::validate)
      .def("__len__", [](const events::EventStream& s) { return s.events.size(); })
      .def("__eq__", [](const events::EventStream& a, const events::EventStream& b) { return a == b; });

  m.def(
      "parse_stream",
      [](py::bytes data, const std::string& format, bool lenient) {
        events::ParseOptions opt;
        opt.ordering = lenient ? events::Ordering::Lenient : events::Ordering::Strict;
        return events::parse_stream(std::string(data), fmt(format), opt);
      },
      py::arg("data"), py::arg("format") = "text", py::arg("lenient") = false);
  m.def(
      "serialize_stream",
      [](const events::EventStream& s, const std::string& format) {
        return py::bytes(events::serialize_stream(s, fmt(format)));
      },
      py::arg("stream"), py::arg("format") = "text");
  m.def(
      "generate_dataset",
      [](int classes, int per_class, std::uint64_t seed, double duration_ms, double noise_rate_per_ms) {
        events::DatasetSpec spec;
        spec.classes = classes;
        spec.per_class = per_class;
        spec.duration = static_cast<events::Microseconds>(duration_ms * 1000.0);
        spec.noise_rate_per_ms = noise_rate_per_ms;
        return events::generate_dataset(spec, seed);
      },
      py::arg("classes") = 4, py::arg("per_class") = 20, py::arg("seed") = 1, py::arg("duration_ms") = 30.0,
      py::arg("noise_rate_per_ms") = 10.0);
  m.def("concatenate", [](const std::vector<events::EventStream>& parts) {
    std::vector<events::StreamSpan> spans;
    auto joined = events::concatenate(parts, &spans);
    std::vector<py::tuple> out;
    for (const auto& s : spans) out.push_back(py::make_tuple(s.begin, s.end, s.label));
    return py::make_tuple(joined, out);
  });
}

void bind_model(py::module_& m) {
  py::class_<snn::PspKernel>(m, "PspKernel")
      .def(py::init<double, double>(), py::arg("tau_m_ms"), py::arg("ratio") = snn::PspKernel::kDefaultRatio)
      .def_property_readonly("tau_m", &snn::PspKernel::tau_m)
      .def_property_readonly("tau_s", &snn::PspKernel::tau_s)
      .def_property_readonly("v0", &snn::PspKernel::v0)
      .def_property_readonly("peak_delay", &snn::PspKernel::peak_delay)
      .def("__call__", &snn::PspKernel::operator());

  // Spike trains cross the boundary as (time_ms, afferent) pairs.
  auto to_spikes = [](const std::vector<std::pair<double, std::uint32_t>>& in) {
    std::vector<snn::AfferentSpike> out;
    out.reserve(in.size());
    for (auto [t, a] : in) out.push_back({t, a});
    return out;
  };
  m.def(
      "evaluate_voltage",
      [to_spikes](const snn::PspKernel& k, const std::vector<double>& w,
                  const std::vector<std::pair<double, std::uint32_t>>& spikes, double t) {
        auto s = to_spikes(spikes);
        snn::check_sorted(s);
        return snn::evaluate_voltage(k, w, s, t);
      },
      py::arg("kernel"), py::arg("weights"), py::arg("spikes"), py::arg("t"));
  m.def(
      "detect_peak",
      [to_spikes](const snn::PspKernel& k, const std::vector<double>& w,
                  const std::vector<std::pair<double, std::uint32_t>>& spikes, double t_start, double range) {
        auto s = to_spikes(spikes);
        auto r = snn::detect_peak(k, w, s, t_start, range);
        return py::make_tuple(r.t_peak, r.v_peak);
      },
      py::arg("kernel"), py::arg("weights"), py::arg("spikes"), py::arg("t_start"), py::arg("range"));

  py::class_<WeightMatrix>(m, "WeightMatrix")
      .def_property_readonly("classes", &WeightMatrix::classes)
      .def_property_readonly("population", &WeightMatrix::population)
      .def_property_readonly("afferents", &WeightMatrix::afferents)
      .def("at", py::overload_cast<int, int>(&WeightMatrix::at, py::const_))
      .def("values", [](const WeightMatrix& w) { return w.data(); })
      .def("__eq__", [](const WeightMatrix& a, const WeightMatrix& b) { return a == b; });
  m.def("read_weights", [](const std::filesystem::path& p) { return read_weights(p); });
}

void bind_pipeline(py::module_& m) {
  py::class_<config::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_readwrite("tau_m_ms", &config::RunConfig::tau_m_ms)
      .def_readwrite("tau_ratio", &config::RunConfig::tau_ratio)
      .def_property(
          "learning_rate", [](const config::RunConfig& c) { return c.spa.learning_rate; },
          [](config::RunConfig& c, double v) { c.spa.learning_rate = v; })
      .def_property(
          "search_range_ms", [](const config::RunConfig& c) { return c.spa.search_range_ms; },
          [](config::RunConfig& c, double v) { c.spa.search_range_ms = v; })
      .def_property(
          "iterations", [](const config::RunConfig& c) { return c.spa.iterations; },
          [](config::RunConfig& c, int v) { c.spa.iterations = v; })
      .def_property(
          "population", [](const config::RunConfig& c) { return c.spa.population; },
          [](config::RunConfig& c, int v) { c.spa.population = v; })
      .def_property(
          "seed", [](const config::RunConfig& c) { return c.spa.seed; },
          [](config::RunConfig& c, std::uint64_t v) { c.spa.seed = v; })
      .def("to_text", [](const config::RunConfig& c) { return config::to_text(c); })
      .def("hash", [](const config::RunConfig& c) { return config::config_hash(c); });
  m.def("preset", [](const std::string& name) { return config::preset(name); });
  m.def("parse_config", [](const std::string& text) { return config::parse_config(text); });

  m.def(
      "train",
      [](const std::vector<events::EventStream>& streams, config::RunConfig cfg) {
        if (streams.empty()) throw ParameterError("training needs at least one stream");
        int classes = 0;
        for (const auto& s : streams) classes = std::max(classes, s.label.value_or(0) + 1);
        cfg.spa.classes = classes;
        cfg.validate();
        py::gil_scoped_release release;
        const auto bank = gabor::GaborBank::build(cfg.gabor);
        const auto s1 = cfg.s1_config();
        const auto layout = gabor::FeatureLayout::of(bank, streams.front().geometry, s1);
        const auto features = featurize_all(streams, bank, s1);
        auto result = spa::spa_train(features, layout.afferent_count(), cfg.kernel(), cfg.spa);
        return std::make_pair(std::move(result.weights), result.iteration_loss);
      },
      py::arg("streams"), py::arg("config"), "Returns (weights, per-iteration loss).");

  m.def(
      "classify",
      [](const events::EventStream& stream, const WeightMatrix& w, const config::RunConfig& cfg) {
        const auto bank = gabor::GaborBank::build(cfg.gabor);
        auto f = featurize(stream, bank, cfg.s1_config());
        return readout::classify(f.spikes, events::to_ms(stream.duration), w, cfg.kernel(), cfg.inference).predicted;
      },
      py::arg("stream"), py::arg("weights"), py::arg("config"));

  m.def(
      "classify_stream",
      [](const events::EventStream& stream, const WeightMatrix& w, const config::RunConfig& cfg) {
        const auto bank = gabor::GaborBank::build(cfg.gabor);
        auto ds = readout::classify_stream(stream, bank, cfg.s1_config(), w, cfg.kernel(), cfg.inference,
                                           cfg.stream_window_ms());
        std::vector<std::pair<double, int>> out;
        for (const auto& d : ds) out.emplace_back(d.time_ms, d.predicted);
        return out;
      },
      py::arg("stream"), py::arg("weights"), py::arg("config"), "List of (time_ms, predicted class).");
}

}  // namespace

PYBIND11_MODULE(_spikestream, m) {
  m.doc() = "Event-stream classification with Gabor features and a segmented spiking readout";
  m.attr("__version__") = kVersion;

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParameterError& e) {
      py::set_error(PyExc_ValueError, e.what());
    } catch (const RangeError& e) {
      py::set_error(PyExc_ValueError, e.what());
    }
  });

  bind_events(m);
  bind_model(m);
  bind_pipeline(m);
}
