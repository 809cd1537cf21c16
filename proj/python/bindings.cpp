#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ecggraph/features.hpp"
#include "ecggraph/fiducials.hpp"
#include "ecggraph/graph.hpp"
#include "ecggraph/pipeline.hpp"
#include "ecggraph/preprocess.hpp"
#include "ecggraph/synthetic.hpp"
#include "ecggraph/wfdb.hpp"

namespace py = pybind11;
using namespace ecggraph;

namespace {

py::dict header_dict(const wfdb::RecordHeader& h) {
  py::list signals;
  for (const auto& s : h.signals) {
    py::dict d;
    d["file_name"] = s.file_name;
    d["format"] = s.storage_format;
    d["gain"] = s.gain;
    d["adc_resolution"] = s.adc_resolution;
    d["adc_zero"] = s.adc_zero;
    d["baseline"] = s.baseline;
    d["initial_value"] = s.initial_value;
    d["checksum"] = s.checksum;
    d["lead"] = s.lead_name;
    signals.append(d);
  }
  py::dict out;
  out["record"] = h.record_id;
  out["n_signals"] = h.n_signals;
  out["fs"] = h.sampling_rate;
  out["n_samples"] = h.n_samples;
  out["signals"] = signals;
  return out;
}

py::object aami(const std::optional<AamiClass>& c) {
  if (!c) return py::none();
  return py::str(std::string(1, class_char(*c)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ECG beat classification core";

  py::register_exception<wfdb::WfdbError>(m, "WfdbError", PyExc_ValueError);
  py::register_exception<pipeline::StageError>(m, "StageError", PyExc_RuntimeError);

  m.def("parse_header", [](const std::string& text) { return header_dict(wfdb::parse_header(text)); });
  m.def("decode_format212", [](const py::bytes& data, std::size_t n) {
    const std::string s = data;
    const std::vector<std::uint8_t> bytes(s.begin(), s.end());
    auto d = wfdb::decode_format212(bytes, n);
    return py::make_tuple(d.channel0, d.channel1);
  });
  m.def("encode_format212", [](const std::vector<int>& c0, const std::vector<int>& c1) {
    const auto b = wfdb::encode_format212(c0, c1);
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
  });
  m.def("read_annotations", [](const std::string& path) {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (const auto& a : wfdb::parse_annotations(wfdb::read_binary_file(path))) {
      out.emplace_back(a.sample_index, std::string(1, a.symbol));
    }
    return out;
  }, "Beat annotations (sample, symbol) of an MIT-format annotation file.");
  m.def("load_record", [](const std::string& dir, const std::string& id) {
    const auto rec = wfdb::load_record(dir, id);
    py::list beats;
    for (const auto& b : rec.beats) {
      beats.append(py::make_tuple(b.sample_index, std::string(1, b.symbol), aami(b.aami_class)));
    }
    py::dict out;
    out["header"] = header_dict(rec.header);
    out["lead_ii_channel"] = rec.lead_ii_channel;
    out["lead_ii"] = rec.lead_ii;
    out["beats"] = beats;
    return out;
  });
  m.def("map_symbol", [](const std::string& s) {
    if (s.size() != 1) throw py::value_error("expected a single character");
    return aami(wfdb::map_symbol(s[0]));
  });

  m.def("remove_baseline", [](const std::vector<double>& x) { return preprocess::remove_baseline(x); });
  m.def("design_fir_bandpass", [] { return preprocess::design_fir_bandpass(); });
  m.def("filter_signal", [](const std::vector<double>& x, const std::vector<double>& taps) {
    return preprocess::filter_signal(x, taps);
  });
  m.def("pan_tompkins", [](const std::vector<double>& x, double fs) {
    return fiducials::pan_tompkins(x, fs);
  }, py::arg("x"), py::arg("fs") = 360.0);

  m.def("feature_names", [] {
    std::vector<std::string> out;
    for (auto n : features::feature_names()) out.emplace_back(n);
    return out;
  });
  m.def("pearson_matrix", [](const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw py::value_error("empty matrix");
    Matrix x(rows.size(), rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (rows[r].size() != x.cols()) throw py::value_error("ragged matrix");
      std::copy(rows[r].begin(), rows[r].end(), x.row(r).begin());
    }
    const auto p = graph::pearson_matrix(x);
    std::vector<std::vector<double>> out(x.cols());
    for (std::size_t i = 0; i < x.cols(); ++i) {
      const auto row = p.corr.row(i);
      out[i].assign(row.begin(), row.end());
    }
    return out;
  });

  m.def("write_synthetic_database", [](const std::string& dir, std::uint64_t seed, double duration_s) {
    synthetic::SyntheticOptions opt;
    opt.seed = seed;
    opt.duration_s = duration_s;
    return synthetic::write_database(dir, wfdb::DatasetSplit::standard(), opt);
  }, py::arg("dir"), py::arg("seed") = 1, py::arg("duration_s") = 120.0);

  m.def("run_stage", [](const std::string& stage, const std::string& config_json) {
    pipeline::PipelineConfig c;
    pipeline::apply_config_json(c, nlohmann::json::parse(config_json));
    py::gil_scoped_release release;
    pipeline::run_stage(stage, c);
  }, py::arg("stage"), py::arg("config_json"),
     "Runs one pipeline stage with a JSON config (same keys as --config).");
}
