#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lpq {

/// FFN weight shapes of LLaMA-1B/13B/65B at batch 8.
struct BenchPreset {
  std::string_view name;
  std::size_t rows;
  std::size_t cols;
  std::size_t batch;
};

std::span<const BenchPreset> bench_presets() noexcept;
/// Case-insensitive lookup; nullptr when unknown.
const BenchPreset* find_bench_preset(std::string_view name) noexcept;

struct BenchConfig {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t batch = 8;
  std::size_t repeat = 3;
  unsigned threads = 1;
  std::uint64_t seed = 42;
  std::size_t int4_block_size = 128;
};

struct BenchResult {
  std::string path;
  double median_ms = 0.0;
  std::size_t weight_bytes = 0;
  double checksum = 0.0;  // sum of outputs; deterministic for a given seed
};

/// Runs fp16 dense, FP6 naive, FP6 bias-shift, and INT4 FGQ over the same
/// seeded weights and activations.
std::vector<BenchResult> run_bench(const BenchConfig& config);

/// Entry point shared by the `lpq` binary and the tests. `args[0]` is the
/// program name. Returns the process exit code (0 or 1).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lpq
