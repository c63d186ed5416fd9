#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fusskit/losses.hpp"
#include "fusskit/metrics.hpp"
#include "fusskit/room.hpp"
#include "fusskit/scenes.hpp"
#include "fusskit/serialization.hpp"

namespace py = pybind11;
using namespace fuss;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::span<const double> view(const Array& a) {
    if (a.ndim() != 1) throw Error(Errc::invalid_argument, "expected a 1-D array");
    return {a.data(), static_cast<std::size_t>(a.size())};
}

Array to_array(std::span<const double> x) {
    Array out(static_cast<py::ssize_t>(x.size()));
    std::copy(x.begin(), x.end(), out.mutable_data());
    return out;
}

AudioBuffer to_buffer(const Array& a, int sample_rate) {
    const auto v = view(a);
    return AudioBuffer(std::vector<double>(v.begin(), v.end()), sample_rate);
}

std::vector<AudioBuffer> to_buffers(const std::vector<Array>& arrays, int sample_rate) {
    std::vector<AudioBuffer> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays) out.push_back(to_buffer(a, sample_rate));
    return out;
}

py::object json_to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

}  // namespace

PYBIND11_MODULE(_fusskit, m) {
    m.doc() = "Sound separation dataset, loss and metric primitives";

    static py::exception<Error> error(m, "FussError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (std::string(errc_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::class_<SiSnrDiagnostics>(m, "SiSnrDiagnostics")
        .def_readonly("alpha", &SiSnrDiagnostics::alpha)
        .def_readonly("rho", &SiSnrDiagnostics::rho)
        .def_readonly("value_db", &SiSnrDiagnostics::value_db)
        .def("__repr__", [](const SiSnrDiagnostics& d) {
            return "SiSnrDiagnostics(value_db=" + std::to_string(d.value_db) + ")";
        });

    m.def("si_snr_scaled", [](const Array& y, const Array& e, double eps) { return si_snr_scaled(view(y), view(e), eps); },
          py::arg("reference"), py::arg("estimate"), py::arg("epsilon") = 1e-8);
    m.def("si_snr_stabilized",
          [](const Array& y, const Array& e, double eps) { return si_snr_stabilized(view(y), view(e), eps); },
          py::arg("reference"), py::arg("estimate"), py::arg("epsilon") = 1e-8);

    m.def("loss_snr", [](const Array& y, const Array& e, double tau) { return loss_snr(view(y), view(e), tau); },
          py::arg("reference"), py::arg("estimate"), py::arg("tau") = 1e-3);
    m.def("loss_inactive", [](const Array& x, const Array& e, double tau) { return loss_inactive(view(x), view(e), tau); },
          py::arg("mixture"), py::arg("estimate"), py::arg("tau") = 1e-3);
    m.def("loss_snr_gradient",
          [](const Array& y, const Array& e, double tau) { return to_array(loss_snr_gradient(view(y), view(e), tau)); },
          py::arg("reference"), py::arg("estimate"), py::arg("tau") = 1e-3);
    m.def("loss_inactive_gradient",
          [](const Array& x, const Array& e, double tau) { return to_array(loss_inactive_gradient(view(x), view(e), tau)); },
          py::arg("mixture"), py::arg("estimate"), py::arg("tau") = 1e-3);

    m.def(
        "mixture_consistency",
        [](const std::vector<Array>& sources, const Array& mixture) {
            std::vector<std::vector<double>> raw;
            for (const auto& s : sources) {
                const auto v = view(s);
                raw.emplace_back(v.begin(), v.end());
            }
            std::vector<Array> out;
            for (const auto& s : mixture_consistency(std::span<const std::vector<double>>(raw), view(mixture))) {
                out.push_back(to_array(s));
            }
            return out;
        },
        py::arg("sources"), py::arg("mixture"));

    m.def(
        "pit_loss",
        [](const std::vector<Array>& refs, const std::vector<Array>& ests, const Array& mixture, double snr_max,
           const std::string& reduction) {
            LossConfig config;
            config.snr_max = snr_max;
            config.num_outputs = 0;
            if (reduction == "mean") config.reduction = LossReduction::mean;
            else if (reduction != "sum") throw Error(Errc::invalid_argument, "reduction must be 'sum' or 'mean'");
            const int sr = kDefaultSampleRate;
            return json_to_py(to_json(pit_loss(to_buffers(refs, sr), to_buffers(ests, sr), to_buffer(mixture, sr), config)));
        },
        py::arg("references"), py::arg("estimates"), py::arg("mixture"), py::arg("snr_max") = 30.0,
        py::arg("reduction") = "sum");

    m.def(
        "evaluate_example",
        [](const std::vector<Array>& refs, const std::vector<Array>& ests, const Array& mixture, double epsilon,
           double inactive_margin_db, const std::string& formulation) {
            MetricConfig config{epsilon, inactive_margin_db, parse_formulation(formulation)};
            const int sr = kDefaultSampleRate;
            return json_to_py(to_json(evaluate_example(to_buffers(refs, sr), to_buffers(ests, sr), to_buffer(mixture, sr), config)));
        },
        py::arg("references"), py::arg("estimates"), py::arg("mixture"), py::arg("epsilon") = 1e-8,
        py::arg("inactive_margin_db") = 20.0, py::arg("formulation") = "stabilized");

    py::class_<RoomSpec>(m, "RoomSpec")
        .def_readonly("width", &RoomSpec::width)
        .def_readonly("length", &RoomSpec::length)
        .def_readonly("height", &RoomSpec::height)
        .def_readonly("reflectivity_gain", &RoomSpec::reflectivity_gain)
        .def_readonly("seed", &RoomSpec::seed)
        .def_property_readonly("mic_position", [](const RoomSpec& r) {
            return py::make_tuple(r.mic_position.x, r.mic_position.y, r.mic_position.z);
        })
        .def_property_readonly("source_positions", [](const RoomSpec& r) {
            py::list out;
            for (const auto& p : r.source_positions) out.append(py::make_tuple(p.x, p.y, p.z));
            return out;
        })
        .def_property_readonly("wall_materials", [](const RoomSpec& r) {
            std::vector<std::string> names;
            for (const auto& mat : r.wall_materials) names.push_back(mat.name);
            return names;
        })
        .def("sabine_t60", &sabine_t60)
        .def("to_json", [](const RoomSpec& r, int sample_rate) {
            SimConfig sim;
            sim.sample_rate = sample_rate;
            return json_to_py(room_sidecar_json(r, sim));
        }, py::arg("sample_rate") = kDefaultSampleRate);

    m.def("sample_room", [](std::uint64_t seed, int n_sources) { return sample_room(seed, n_sources); },
          py::arg("seed"), py::arg("n_sources") = 4);
    m.def(
        "image_method_rir",
        [](const RoomSpec& room, int source_index, int sample_rate, double rir_length, int max_order) {
            SimConfig sim;
            sim.sample_rate = sample_rate;
            sim.rir_length = rir_length;
            sim.max_order = max_order;
            return to_array(image_method_rir(room, source_index, sim).samples.samples());
        },
        py::arg("room"), py::arg("source_index") = 0, py::arg("sample_rate") = kDefaultSampleRate,
        py::arg("rir_length") = 0.0, py::arg("max_order") = -1);
    m.def(
        "measure_t60",
        [](const Array& rir, int sample_rate) {
            const T60Estimate t = measure_t60(to_buffer(rir, sample_rate));
            return py::make_tuple(t.seconds, t.censored);
        },
        py::arg("rir"), py::arg("sample_rate") = kDefaultSampleRate);

    m.def(
        "overlap_stats",
        [](const std::vector<Array>& sources, int sample_rate, double window, double threshold_db) {
            const OverlapStats s = overlap_stats(to_buffers(sources, sample_rate), window, threshold_db);
            py::dict d;
            d["active_counts"] = s.active_counts;
            d["percent"] = s.percent;
            d["active_fraction"] = s.active_fraction;
            d["num_windows"] = s.num_windows;
            return d;
        },
        py::arg("sources"), py::arg("sample_rate") = kDefaultSampleRate, py::arg("window") = 0.025,
        py::arg("threshold_db") = -60.0);

    m.def(
        "read_wav",
        [](const std::filesystem::path& path) {
            const AudioBuffer b = read_wav(path);
            return py::make_tuple(to_array(b.samples()), b.sample_rate());
        },
        py::arg("path"));
    m.def(
        "write_wav",
        [](const std::filesystem::path& path, const Array& samples, int sample_rate, const std::string& encoding) {
            WavEncoding enc = WavEncoding::float32;
            if (encoding == "pcm16") enc = WavEncoding::pcm16;
            else if (encoding != "float32") throw Error(Errc::invalid_argument, "encoding must be 'pcm16' or 'float32'");
            write_wav(to_buffer(samples, sample_rate), path, enc);
        },
        py::arg("path"), py::arg("samples"), py::arg("sample_rate") = kDefaultSampleRate,
        py::arg("encoding") = "float32");
}
