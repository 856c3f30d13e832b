#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <functional>
#include <random>

#include "lpq/cli.hpp"
#include "lpq/error.hpp"
#include "lpq/gemm.hpp"
#include "lpq/quantizer.hpp"

namespace lpq {

namespace {

constexpr std::array<BenchPreset, 6> kPresets{{
    {"ffn1-1b", 5504, 2048, 8},
    {"ffn2-1b", 2048, 5504, 8},
    {"ffn1-13b", 13824, 5120, 8},
    {"ffn2-13b", 5120, 13824, 8},
    {"ffn1-65b", 22016, 8192, 8},
    {"ffn2-65b", 8192, 22016, 8},
}};

double checksum(const Matrix<float>& y) {
  double sum = 0.0;
  for (float v : y.values()) sum += v;
  return sum;
}

double median_ms(std::size_t repeat, const std::function<Matrix<float>()>& run, double& sum_out) {
  std::vector<double> times;
  times.reserve(repeat);
  for (std::size_t i = 0; i < repeat; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const Matrix<float> y = run();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    sum_out = checksum(y);
  }
  std::sort(times.begin(), times.end());
  const std::size_t n = times.size();
  return n % 2 == 1 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

std::size_t param_bytes(const QuantizedTensor& q) {
  return q.block_count() * (is_minifloat(q.scheme.format) ? 2 : 4);
}

std::size_t payload_bytes(const QuantizedTensor& q) {
  if (const auto* s = std::get_if<PackedSegments>(&q.payload)) return s->seg4.size() + s->seg_tail.size();
  return std::get<NibbleArray>(q.payload).bytes.size();
}

}  // namespace

std::span<const BenchPreset> bench_presets() noexcept { return kPresets; }

const BenchPreset* find_bench_preset(std::string_view name) noexcept {
  for (const BenchPreset& p : kPresets) {
    if (p.name.size() == name.size() &&
        std::equal(p.name.begin(), p.name.end(), name.begin(), [](char a, char b) {
          return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
        })) {
      return &p;
    }
  }
  return nullptr;
}

std::vector<BenchResult> run_bench(const BenchConfig& config) {
  if (config.rows == 0 || config.cols == 0 || config.batch == 0 || config.repeat == 0) {
    throw Error(ErrorKind::InvalidInput, "bench needs positive rows, cols, batch and repeat");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<float> weight_dist(0.0f, 0.02f);
  std::uniform_real_distribution<float> act_dist(-1.0f, 1.0f);

  Matrix<float> weights(config.rows, config.cols);
  for (float& w : weights.values()) w = weight_dist(rng);
  Matrix<float> x(config.cols, config.batch);
  for (float& v : x.values()) v = Half::from_double(act_dist(rng)).to_float();

  Matrix<Half> dense(config.rows, config.cols);
  for (std::size_t i = 0; i < weights.size(); ++i) dense.values()[i] = Half::from_double(weights.values()[i]);

  const QuantizedTensor fp6 =
      enable_bias_shift(quantize_tensor(weights, {Granularity::cgq, 0, NumericFormat::fp6_e3m2}));
  const QuantizedTensor int4 =
      quantize_tensor(weights, {Granularity::fgq, config.int4_block_size, NumericFormat::int4_asym});
  weights = Matrix<float>();

  std::vector<BenchResult> results;
  BenchResult r;

  r = {"fp16_dense", 0.0, dense.size() * 2, 0.0};
  r.median_ms = median_ms(config.repeat, [&] { return gemm_dense_half(dense, x, config.threads); }, r.checksum);
  results.push_back(r);

  r = {"fp6_naive", 0.0, payload_bytes(fp6) + param_bytes(fp6), 0.0};
  r.median_ms = median_ms(
      config.repeat, [&] { return gemm_quantized(fp6, x, {DequantPath::naive, config.threads}); }, r.checksum);
  results.push_back(r);

  r = {"fp6_bias_shift", 0.0, payload_bytes(fp6) + param_bytes(fp6), 0.0};
  r.median_ms = median_ms(
      config.repeat, [&] { return gemm_quantized(fp6, x, {DequantPath::bias_shift, config.threads}); },
      r.checksum);
  results.push_back(r);

  r = {"int4_fgq", 0.0, payload_bytes(int4) + param_bytes(int4), 0.0};
  r.median_ms = median_ms(
      config.repeat, [&] { return gemm_quantized(int4, x, {DequantPath::naive, config.threads}); }, r.checksum);
  results.push_back(r);
  return results;
}

}  // namespace lpq
