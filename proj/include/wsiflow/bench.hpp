#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wsiflow {

enum class AccessMode : std::uint8_t { Read, Write };
enum class AtomicMode : std::uint8_t { SingleVariable, PerWorkerArray };

struct BenchReport {
  std::string name;
  std::map<std::string, std::string> parameters;
  std::string unit;  // "MB/s" or "Mops/s"
  std::vector<double> samples;  // one throughput per repetition
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  // Published figures for comparison; never used as expectations.
  std::map<std::string, double> reference;

  int repetitions() const noexcept { return static_cast<int>(samples.size()); }
  // Fills min/median/max from samples. Throws if fewer than 3 or any <= 0.
  void finalize();
  std::string to_json_line() const;
};

struct RandomAccessOptions {
  int matrix_dim = 4096;
  std::uint64_t op_count = 10'000'000;
  AccessMode mode = AccessMode::Read;
  int workers = 1;
  int repetitions = 3;
  std::uint64_t seed = 42;
};

// Index vector of `op_count` positions in a dim x dim matrix, from `seed`.
std::vector<std::uint32_t> random_indices(int matrix_dim, std::uint64_t op_count, std::uint64_t seed);

/// Reads or writes 4-byte elements of a matrix at pre-generated random
/// positions; MB/s = op_count * 4 / elapsed. Index generation is not timed.
BenchReport bench_random_access(const RandomAccessOptions& options);

struct AtomicAddOptions {
  AtomicMode mode = AtomicMode::SingleVariable;
  std::uint64_t op_count = 10'000'000;
  int workers = 1;
  int repetitions = 3;
};

/// Atomic increments into one shared counter, or into one cache-line padded
/// counter per worker. Throws IntegrityError unless the final total equals op_count.
BenchReport bench_atomic_add(const AtomicAddOptions& options);

struct StreamOptions {
  std::uint64_t array_bytes = 0;  // 0: default_stream_bytes()
  int workers = 1;
  int repetitions = 3;
};

// Copy kernel b[i] = a[i]; MB/s counts the bytes read plus the bytes written.
BenchReport bench_stream(const StreamOptions& options);

// Last-level cache size in bytes, if the OS reports it.
std::optional<std::uint64_t> last_level_cache_bytes();
// 4x the last-level cache (32 MiB assumed when unknown), capped at a quarter of physical memory.
std::uint64_t default_stream_bytes();

// Appends one JSON object per line; never truncates.
void append_reports(const std::filesystem::path& path, const std::vector<BenchReport>& reports);

}  // namespace wsiflow
