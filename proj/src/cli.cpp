#include "lpq/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "lpq/container.hpp"
#include "lpq/error.hpp"
#include "lpq/gemm.hpp"
#include "lpq/packing.hpp"
#include "lpq/quantizer.hpp"
#include "lpq/scalar_codec.hpp"

namespace lpq {

namespace {

std::string real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string binary(unsigned value, int width) {
  std::string s = "0b";
  for (int b = width - 1; b >= 0; --b) s.push_back(((value >> b) & 1u) ? '1' : '0');
  return s;
}

struct Shape {
  std::size_t rows = 0;
  std::size_t cols = 0;
};

Shape parse_shape(const std::string& text) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%zux%zu%c", &rows, &cols, &tail) != 2) {
    throw Error(ErrorKind::UsageError, "shape must look like RxC, got '" + text + "'");
  }
  return {rows, cols};
}

RawDtype parse_dtype(const std::string& s) { return s == "f16" ? RawDtype::f16le : RawDtype::f32le; }

NumericFormat parse_format(const std::string& s) {
  if (s == "fp6") return NumericFormat::fp6_e3m2;
  if (s == "fp5") return NumericFormat::fp5_e3m1;
  return NumericFormat::int4_asym;
}

std::string_view format_name(NumericFormat f) {
  switch (f) {
    case NumericFormat::fp6_e3m2: return "fp6_e3m2";
    case NumericFormat::fp5_e3m1: return "fp5_e3m1";
    case NumericFormat::int4_asym: return "int4_asym";
  }
  return "unknown";
}

DequantPath parse_path(const std::string& s) {
  return s == "bias-shift" ? DequantPath::bias_shift : DequantPath::naive;
}

bool looks_like_lpqt(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= kLpqtMagic.size() && std::equal(kLpqtMagic.begin(), kLpqtMagic.end(), bytes.begin());
}

std::size_t payload_bytes(const QuantizedTensor& q) {
  if (const auto* s = std::get_if<PackedSegments>(&q.payload)) return s->seg4.size() + s->seg_tail.size();
  return std::get<NibbleArray>(q.payload).bytes.size();
}

std::size_t param_bytes(const QuantizedTensor& q) {
  std::size_t per_block = is_minifloat(q.scheme.format) ? 2 : 4;
  if (q.bias_shift) per_block += 2;
  return q.block_count() * per_block;
}

void print_report(std::ostream& out, const ErrorReport& r) {
  out << "mse=" << real(r.mse) << '\n'
      << "max_abs_error=" << real(r.max_abs_error) << '\n'
      << "sqnr_db=" << real(r.sqnr_db) << '\n';
}

void print_halves(std::ostream& out, std::string_view key, const std::vector<Half>& values) {
  out << key << '=';
  const std::size_t shown = std::min<std::size_t>(values.size(), 8);
  for (std::size_t i = 0; i < shown; ++i) out << (i ? "," : "") << real(values[i].to_double());
  out << '\n';
}

struct QuantizeArgs {
  std::string input, output, shape, dtype = "f32", format, scheme = "cgq";
  std::size_t block_size = kDefaultBlockSize;
  bool bias_shift = false;
};

int cmd_quantize(const QuantizeArgs& a, std::ostream& out) {
  const NumericFormat format = parse_format(a.format);
  if (a.bias_shift && !is_minifloat(format)) {
    throw Error(ErrorKind::UsageError, "--bias-shift applies to fp6/fp5 only");
  }
  const Shape shape = parse_shape(a.shape);
  const Matrix<double> w = read_raw(read_file(a.input), shape.rows, shape.cols, parse_dtype(a.dtype));
  const QuantScheme scheme{a.scheme == "fgq" ? Granularity::fgq : Granularity::cgq, a.block_size, format};
  QuantizedTensor q = quantize_tensor(w, scheme);
  if (a.bias_shift) q = enable_bias_shift(std::move(q));
  const std::vector<std::uint8_t> file = write_lpqt(q);
  write_file(a.output, file);

  const std::size_t baseline = q.rows * q.cols * 2;
  const std::size_t stored = payload_bytes(q) + param_bytes(q);
  out << "rows=" << q.rows << '\n'
      << "cols=" << q.cols << '\n'
      << "format=" << format_name(format) << '\n'
      << "scheme=" << a.scheme << '\n'
      << "block_size=" << q.effective_block_size() << '\n'
      << "blocks=" << q.block_count() << '\n'
      << "payload_bytes=" << payload_bytes(q) << '\n'
      << "param_bytes=" << param_bytes(q) << '\n'
      << "baseline_fp16_bytes=" << baseline << '\n'
      << "storage_fraction=" << real(baseline ? double(stored) / double(baseline) : 0.0) << '\n'
      << "compression_ratio=" << real(stored ? double(baseline) / double(stored) : 0.0) << '\n'
      << "file_bytes=" << file.size() << '\n';
  return 0;
}

int cmd_dequantize(const std::string& input, const std::string& output, const std::string& path,
                   std::ostream& out) {
  const QuantizedTensor q = read_lpqt(read_file(input));
  const Matrix<double> w = dequantize_tensor(q, parse_path(path));
  const std::vector<std::uint8_t> bytes = write_raw(w.values(), RawDtype::f32le);
  write_file(output, bytes);
  out << "rows=" << q.rows << '\n' << "cols=" << q.cols << '\n' << "path=" << path << '\n'
      << "bytes=" << bytes.size() << '\n';
  return 0;
}

int cmd_stats(const std::string& input, const std::string& reference, const std::string& shape_text,
              const std::string& dtype, const std::string& input_dtype, std::ostream& out) {
  const Shape shape = parse_shape(shape_text);
  const Matrix<double> ref = read_raw(read_file(reference), shape.rows, shape.cols, parse_dtype(dtype));
  const std::vector<std::uint8_t> bytes = read_file(input);
  Matrix<double> approx;
  if (looks_like_lpqt(bytes)) {
    approx = dequantize_tensor(read_lpqt(bytes));
  } else {
    approx = read_raw(bytes, shape.rows, shape.cols, parse_dtype(input_dtype.empty() ? dtype : input_dtype));
  }
  print_report(out, error_report(ref, approx));
  return 0;
}

int cmd_inspect(const std::string& input, std::ostream& out) {
  const std::vector<std::uint8_t> bytes = read_file(input);
  const QuantizedTensor q = read_lpqt(bytes);
  std::vector<Half> scales;
  std::vector<Half> zeros;
  for (const BlockParams& p : q.block_params) {
    scales.push_back(p.scale);
    if (p.zero_point) zeros.push_back(*p.zero_point);
  }
  out << "magic=LPQT\n"
      << "version=" << kLpqtVersion << '\n'
      << "format=" << format_name(q.scheme.format) << '\n'
      << "granularity=" << (q.scheme.granularity == Granularity::fgq ? "fgq" : "cgq") << '\n'
      << "block_size=" << q.scheme.block_size << '\n'
      << "rows=" << q.rows << '\n'
      << "cols=" << q.cols << '\n'
      << "bias_shift=" << (q.bias_shift ? 1 : 0) << '\n'
      << "blocks=" << q.block_count() << '\n';
  print_halves(out, "scales", scales);
  if (!zeros.empty()) print_halves(out, "zero_points", zeros);
  if (q.bias_shift) print_halves(out, "folded_scales", q.folded_scales);
  if (const auto* s = std::get_if<PackedSegments>(&q.payload)) {
    out << "seg4_bytes=" << s->seg4.size() << '\n' << "tail_bytes=" << s->seg_tail.size() << '\n';
  } else {
    out << "nibble_bytes=" << std::get<NibbleArray>(q.payload).bytes.size() << '\n';
  }
  out << "file_bytes=" << bytes.size() << '\n';
  return 0;
}

struct GemmArgs {
  std::string weights, activations, output, dtype = "f32", path = "naive";
  std::size_t m = 0;
  unsigned threads = 1;
  bool check = false;
};

int cmd_gemm(const GemmArgs& a, std::ostream& out, std::ostream& err) {
  const QuantizedTensor q = read_lpqt(read_file(a.weights));
  const std::vector<std::uint8_t> act_bytes = read_file(a.activations);
  const std::size_t width = dtype_width(parse_dtype(a.dtype));
  if (act_bytes.size() != q.cols * a.m * width) {
    throw Error(ErrorKind::ShapeError, "activations hold " + std::to_string(act_bytes.size()) +
                                           " bytes, expected K=" + std::to_string(q.cols) +
                                           " x M=" + std::to_string(a.m));
  }
  const Matrix<double> x = read_raw(act_bytes, q.cols, a.m, parse_dtype(a.dtype));
  const Matrix<float> y = gemm_quantized(q, matrix_cast<float>(x), {parse_path(a.path), a.threads});
  if (!a.output.empty()) write_file(a.output, write_raw(matrix_cast<double>(y).values(), RawDtype::f32le));
  out << "rows=" << y.rows() << '\n' << "cols=" << y.cols() << '\n' << "inner=" << q.cols << '\n';
  if (!a.check) return 0;

  const Matrix<double> w_hat = dequantize_tensor(q);
  const Matrix<double> y_ref = gemm_reference(w_hat, x);
  double max_w = 0.0;
  double max_x = 0.0;
  for (double v : w_hat.values()) max_w = std::max(max_w, std::fabs(v));
  for (double v : x.values()) max_x = std::max(max_x, std::fabs(v));
  const ErrorReport report = compare_outputs(y, y_ref);
  const double tolerance = gemm_tolerance(q.cols, max_w, max_x);
  print_report(out, report);
  const bool pass = report.max_abs_error <= tolerance;
  out << "tolerance=" << real(tolerance) << '\n' << "check=" << (pass ? "pass" : "fail") << '\n';
  if (!pass) {
    err << "error=ToleranceExceeded message=\"max_abs_error " << real(report.max_abs_error) << " > "
        << real(tolerance) << "\"\n";
    return 1;
  }
  return 0;
}

struct BenchArgs {
  std::string preset, shape;
  std::size_t batch = 8;
  std::size_t repeat = 3;
  unsigned threads = 1;
  std::uint64_t seed = 42;
};

int cmd_bench(const BenchArgs& a, std::ostream& out) {
  BenchConfig config;
  if (!a.preset.empty()) {
    const BenchPreset* p = find_bench_preset(a.preset);
    if (p == nullptr) throw Error(ErrorKind::UsageError, "unknown preset '" + a.preset + "'");
    config.rows = p->rows;
    config.cols = p->cols;
    config.batch = p->batch;
  } else if (!a.shape.empty()) {
    const Shape s = parse_shape(a.shape);
    config.rows = s.rows;
    config.cols = s.cols;
    config.batch = a.batch;
  } else {
    throw Error(ErrorKind::UsageError, "bench needs --preset or --shape");
  }
  config.repeat = a.repeat;
  config.threads = a.threads;
  config.seed = a.seed;

  const std::size_t dense_bytes = config.rows * config.cols * 2;
  out << "weight_shape=" << config.rows << 'x' << config.cols << '\n'
      << "input_shape=" << config.cols << 'x' << config.batch << '\n'
      << "repeat=" << config.repeat << '\n';
  for (const BenchResult& r : run_bench(config)) {
    out << "path=" << r.path << " median_ms=" << real(r.median_ms) << " weight_bytes=" << r.weight_bytes
        << " weight_fraction=" << real(double(r.weight_bytes) / double(dense_bytes))
        << " checksum=" << real(r.checksum) << '\n';
  }
  return 0;
}

int cmd_codebook(const std::string& format_text, std::ostream& out) {
  const MiniFloatFormat& format = format_text == "fp5" ? kFp5E3M1 : kFp6E3M2;
  std::vector<CodebookEntry> entries = codebook(format);
  std::stable_sort(entries.begin(), entries.end(),
                   [](const CodebookEntry& a, const CodebookEntry& b) { return a.value < b.value; });
  for (const CodebookEntry& e : entries) {
    const SegmentSplit s = split_code(format, e.code);
    out << "code=" << binary(e.code.bits, format.total_bits()) << " value=" << real(e.value)
        << " seg4=" << binary(s.seg4, 4) << " tail=" << binary(s.tail, format.tail_bits()) << '\n';
  }
  return 0;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '"', '\'');
  return s;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-bit weight quantization toolkit (FP6/FP5/INT4)", "lpq"};
  app.require_subcommand(1);

  const std::vector<std::string> dtypes{"f32", "f16"};
  const std::vector<std::string> paths{"naive", "bias-shift"};

  QuantizeArgs qa;
  auto* quantize = app.add_subcommand("quantize", "Quantize a raw tensor into an .lpqt file");
  quantize->add_option("--input", qa.input, "Raw row-major tensor")->required();
  quantize->add_option("--shape", qa.shape, "RxC")->required();
  quantize->add_option("--dtype", qa.dtype)->required()->check(CLI::IsMember(dtypes));
  quantize->add_option("--format", qa.format)->required()->check(CLI::IsMember({"fp6", "fp5", "int4"}));
  quantize->add_option("--scheme", qa.scheme)->check(CLI::IsMember({"cgq", "fgq"}))->capture_default_str();
  quantize->add_option("--block-size", qa.block_size, "FGQ block size")->capture_default_str();
  quantize->add_flag("--bias-shift", qa.bias_shift, "Store folded scales for the bias-shift path");
  quantize->add_option("--output", qa.output)->required();

  std::string dq_input, dq_output, dq_path = "naive";
  auto* dequantize = app.add_subcommand("dequantize", "Dequantize an .lpqt file to raw f32le");
  dequantize->add_option("--input", dq_input)->required();
  dequantize->add_option("--output", dq_output)->required();
  dequantize->add_option("--path", dq_path)->check(CLI::IsMember(paths))->capture_default_str();

  std::string st_input, st_reference, st_shape, st_dtype, st_input_dtype;
  auto* stats = app.add_subcommand("stats", "Error statistics against a reference tensor");
  stats->add_option("--input", st_input, ".lpqt file or raw tensor")->required();
  stats->add_option("--reference", st_reference)->required();
  stats->add_option("--shape", st_shape)->required();
  stats->add_option("--dtype", st_dtype, "Reference dtype")->required()->check(CLI::IsMember(dtypes));
  stats->add_option("--input-dtype", st_input_dtype, "Raw input dtype (defaults to --dtype)")
      ->check(CLI::IsMember(dtypes));

  std::string in_input;
  auto* inspect = app.add_subcommand("inspect", "Print .lpqt header and payload sizes");
  inspect->add_option("--input", in_input)->required();

  GemmArgs ga;
  auto* gemm = app.add_subcommand("gemm", "Y = W_hat * X with on-the-fly dequantization");
  gemm->add_option("--weights", ga.weights)->required();
  gemm->add_option("--activations", ga.activations, "Raw K x M activations")->required();
  gemm->add_option("--m", ga.m)->required();
  gemm->add_option("--dtype", ga.dtype, "Activation dtype")->check(CLI::IsMember(dtypes))->capture_default_str();
  gemm->add_option("--output", ga.output, "Write Y as f32le");
  gemm->add_option("--path", ga.path)->check(CLI::IsMember(paths))->capture_default_str();
  gemm->add_option("--threads", ga.threads)->capture_default_str();
  gemm->add_flag("--check", ga.check, "Compare against the double-precision oracle");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "CPU microbenchmark over FFN weight shapes");
  auto* preset_opt = bench->add_option("--preset", ba.preset, "ffn1-1b, ffn2-1b, ffn1-13b, ffn2-13b, ffn1-65b, ffn2-65b");
  bench->add_option("--shape", ba.shape, "RxC")->excludes(preset_opt);
  bench->add_option("--batch", ba.batch)->capture_default_str();
  bench->add_option("--repeat", ba.repeat)->capture_default_str();
  bench->add_option("--threads", ba.threads)->capture_default_str();
  bench->add_option("--seed", ba.seed)->capture_default_str();

  std::string cb_format;
  auto* codebook_cmd = app.add_subcommand("codebook", "List every code of a minifloat format");
  codebook_cmd->add_option("--format", cb_format)->required()->check(CLI::IsMember({"fp6", "fp5"}));

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error=UsageError message=\"" << one_line(e.what()) << "\"\n";
    return 1;
  }

  try {
    if (*quantize) return cmd_quantize(qa, out);
    if (*dequantize) return cmd_dequantize(dq_input, dq_output, dq_path, out);
    if (*stats) return cmd_stats(st_input, st_reference, st_shape, st_dtype, st_input_dtype, out);
    if (*inspect) return cmd_inspect(in_input, out);
    if (*gemm) return cmd_gemm(ga, out, err);
    if (*bench) return cmd_bench(ba, out);
    if (*codebook_cmd) return cmd_codebook(cb_format, out);
  } catch (const Error& e) {
    err << "error=" << to_string(e.kind()) << " message=\"" << one_line(e.what()) << "\"\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error=Internal message=\"" << one_line(e.what()) << "\"\n";
    return 1;
  }
  return 1;
}

}  // namespace lpq
