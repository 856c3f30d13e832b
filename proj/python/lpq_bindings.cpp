#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "lpq/container.hpp"
#include "lpq/dequant.hpp"
#include "lpq/error.hpp"
#include "lpq/gemm.hpp"
#include "lpq/packing.hpp"
#include "lpq/quantizer.hpp"
#include "lpq/scalar_codec.hpp"

namespace py = pybind11;
using namespace lpq;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

const MiniFloatFormat& minifloat(const std::string& name) {
  if (name == "fp6") return kFp6E3M2;
  if (name == "fp5") return kFp5E3M1;
  throw Error(ErrorKind::InvalidScheme, "unknown minifloat format '" + name + "'");
}

NumericFormat numeric(const std::string& name) {
  if (name == "int4") return NumericFormat::int4_asym;
  return minifloat(name).mantissa_bits == 2 ? NumericFormat::fp6_e3m2 : NumericFormat::fp5_e3m1;
}

DequantPath path_of(const std::string& name) {
  if (name == "naive") return DequantPath::naive;
  if (name == "bias-shift" || name == "bias_shift") return DequantPath::bias_shift;
  throw Error(ErrorKind::InvalidInput, "unknown path '" + name + "'");
}

template <class T>
Matrix<T> to_matrix(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::ShapeError, "expected a 2-D array");
  const auto rows = static_cast<std::size_t>(a.shape(0));
  const auto cols = static_cast<std::size_t>(a.shape(1));
  return Matrix<T>(rows, cols, std::vector<T>(a.data(), a.data() + rows * cols));
}

template <class T>
py::array_t<T> to_array(const Matrix<T>& m) {
  py::array_t<T> out({m.rows(), m.cols()});
  std::copy(m.values().begin(), m.values().end(), out.mutable_data());
  return out;
}

py::bytes as_bytes(const std::vector<std::uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_lpq, m) {
  m.doc() = "FP6/FP5/INT4 weight quantization";

  static py::exception<Error> error(m, "LpqError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("decode", [](const std::string& fmt, unsigned code) {
    return decode(minifloat(fmt), Code{static_cast<std::uint8_t>(code)});
  }, py::arg("format"), py::arg("code"));
  m.def("encode_rtn", [](const std::string& fmt, double x) {
    return static_cast<unsigned>(encode_rtn(minifloat(fmt), x).bits);
  }, py::arg("format"), py::arg("x"));
  m.def("codebook", [](const std::string& fmt) {
    std::vector<std::pair<unsigned, double>> out;
    for (const CodebookEntry& e : codebook(minifloat(fmt))) out.emplace_back(e.code.bits, e.value);
    return out;
  }, py::arg("format"));

  m.def("pack", [](const std::string& fmt, const std::vector<unsigned>& codes) {
    std::vector<Code> c;
    for (unsigned v : codes) c.push_back(Code{static_cast<std::uint8_t>(v)});
    const PackedSegments s = pack(minifloat(fmt), c);
    return py::make_tuple(as_bytes(s.seg4), as_bytes(s.seg_tail));
  }, py::arg("format"), py::arg("codes"));
  m.def("unpack", [](const std::string& fmt, const py::bytes& seg4, const py::bytes& tail, std::size_t count) {
    std::vector<unsigned> out;
    for (Code c : unpack(minifloat(fmt), PackedSegments{from_bytes(seg4), from_bytes(tail), count}))
      out.push_back(c.bits);
    return out;
  }, py::arg("format"), py::arg("seg4"), py::arg("tail"), py::arg("count"));

  m.def("fold_scale", [](const std::string& fmt, std::uint16_t scale_bits) {
    return fold_scale(minifloat(fmt), Half::from_bits(scale_bits)).value.bits;
  }, py::arg("format"), py::arg("scale_bits"), "binary16 bit patterns in and out");
  m.def("dequant_naive", [](const std::string& fmt, unsigned code, std::uint16_t scale_bits) {
    return dequant_naive(minifloat(fmt), Code{static_cast<std::uint8_t>(code)}, Half::from_bits(scale_bits)).bits;
  }, py::arg("format"), py::arg("code"), py::arg("scale_bits"));
  m.def("dequant_bias_shift", [](const std::string& fmt, unsigned code, std::uint16_t folded_bits) {
    return dequant_bias_shift(minifloat(fmt), Code{static_cast<std::uint8_t>(code)},
                              FoldedScale{Half::from_bits(folded_bits)}).bits;
  }, py::arg("format"), py::arg("code"), py::arg("folded_bits"));

  py::class_<QuantizedTensor>(m, "QuantizedTensor")
      .def_readonly("rows", &QuantizedTensor::rows)
      .def_readonly("cols", &QuantizedTensor::cols)
      .def_readonly("bias_shift", &QuantizedTensor::bias_shift)
      .def_property_readonly("block_size", &QuantizedTensor::effective_block_size)
      .def_property_readonly("block_count", &QuantizedTensor::block_count)
      .def_property_readonly("scales", [](const QuantizedTensor& q) {
        std::vector<double> v;
        for (const BlockParams& p : q.block_params) v.push_back(p.scale.to_double());
        return v;
      })
      .def_property_readonly("payload_bytes", [](const QuantizedTensor& q) {
        if (const auto* s = std::get_if<PackedSegments>(&q.payload)) return s->seg4.size() + s->seg_tail.size();
        return std::get<NibbleArray>(q.payload).bytes.size();
      })
      .def("to_bytes", [](const QuantizedTensor& q) { return as_bytes(write_lpqt(q)); })
      .def_static("from_bytes", [](const py::bytes& b) { return read_lpqt(from_bytes(b)); })
      .def("__eq__", [](const QuantizedTensor& a, const QuantizedTensor& b) { return a == b; });

  m.def("quantize", [](const DoubleArray& w, const std::string& fmt, const std::string& scheme,
                       std::size_t block_size, bool bias_shift) {
    const Granularity g = scheme == "fgq" ? Granularity::fgq : Granularity::cgq;
    QuantizedTensor q = quantize_tensor(to_matrix(w), {g, block_size, numeric(fmt)});
    return bias_shift ? enable_bias_shift(std::move(q)) : q;
  }, py::arg("weights"), py::arg("format") = "fp6", py::arg("scheme") = "cgq",
        py::arg("block_size") = kDefaultBlockSize, py::arg("bias_shift") = false);
  m.def("dequantize", [](const QuantizedTensor& q, const std::optional<std::string>& path) {
    return to_array(path ? dequantize_tensor(q, path_of(*path)) : dequantize_tensor(q));
  }, py::arg("q"), py::arg("path") = py::none(),
        "Exact values by default; 'naive' or 'bias-shift' give binary16 results");
  m.def("error_report", [](const DoubleArray& ref, const DoubleArray& approx) {
    const ErrorReport r = error_report(to_matrix(ref), to_matrix(approx));
    py::dict d;
    d["mse"] = r.mse;
    d["max_abs_error"] = r.max_abs_error;
    d["sqnr_db"] = r.sqnr_db;
    return d;
  }, py::arg("reference"), py::arg("approx"));
  m.def("gemm", [](const QuantizedTensor& q, const FloatArray& x, const std::string& path, unsigned threads) {
    return to_array(gemm_quantized(q, to_matrix(x), {path_of(path), threads}));
  }, py::arg("q"), py::arg("activations"), py::arg("path") = "naive", py::arg("threads") = 1);
  m.def("gemm_reference", [](const DoubleArray& w, const DoubleArray& x) {
    return to_array(gemm_reference(to_matrix(w), to_matrix(x)));
  }, py::arg("weights"), py::arg("activations"));
}
