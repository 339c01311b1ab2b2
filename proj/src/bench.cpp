#include "wsiflow/bench.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

#include "wsiflow/error.hpp"
#include "wsiflow/parallel.hpp"
#include "wsiflow/synthetic.hpp"

namespace wsiflow {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kMega = 1e6;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t physical_memory_bytes() {
  const long pages = sysconf(_SC_PHYS_PAGES);
  const long page = sysconf(_SC_PAGE_SIZE);
  if (pages <= 0 || page <= 0) {
    return 0;
  }
  return static_cast<std::uint64_t>(pages) * static_cast<std::uint64_t>(page);
}

void check_common(std::uint64_t op_count, int workers, int repetitions) {
  if (op_count == 0) {
    throw InvalidArgument("benchmark op count must be >= 1");
  }
  if (workers < 1) {
    throw InvalidArgument("benchmark worker count must be >= 1");
  }
  if (repetitions < 3) {
    throw InvalidArgument("benchmark needs at least 3 repetitions");
  }
}

struct alignas(64) PaddedCounter {
  std::atomic<std::uint64_t> value{0};
};

}  // namespace

void BenchReport::finalize() {
  if (samples.size() < 3) {
    throw InvalidArgument(name + ": fewer than 3 repetitions");
  }
  for (double s : samples) {
    if (!(s > 0.0)) {
      throw Error(name + ": non-positive throughput measured");
    }
  }
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  min = sorted.front();
  max = sorted.back();
  median = sorted[(sorted.size() - 1) / 2];
}

std::string BenchReport::to_json_line() const {
  nlohmann::json j;
  j["benchmark"] = name;
  j["parameters"] = parameters;
  j["unit"] = unit;
  j["repetitions"] = repetitions();
  j["samples"] = samples;
  j["min"] = min;
  j["median"] = median;
  j["max"] = max;
  j["reference"] = reference;
  j["hardware_threads"] = std::thread::hardware_concurrency();
  j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
  return j.dump();
}

std::vector<std::uint32_t> random_indices(int matrix_dim, std::uint64_t op_count, std::uint64_t seed) {
  if (matrix_dim < 1) {
    throw InvalidArgument("matrix dimension must be >= 1");
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(matrix_dim) * static_cast<std::uint64_t>(matrix_dim);
  if (cells > (std::uint64_t{1} << 32)) {
    throw InvalidArgument("matrix too large for 32-bit indices");
  }
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> idx(op_count);
  for (auto& i : idx) {
    i = static_cast<std::uint32_t>(draw_below(rng, cells));
  }
  return idx;
}

BenchReport bench_random_access(const RandomAccessOptions& o) {
  check_common(o.op_count, o.workers, o.repetitions);
  if (o.matrix_dim < 1) {
    throw InvalidArgument("matrix dimension must be >= 1");
  }
  const std::uint64_t cells = static_cast<std::uint64_t>(o.matrix_dim) * static_cast<std::uint64_t>(o.matrix_dim);
  const std::uint64_t needed = cells * sizeof(std::int32_t) + o.op_count * sizeof(std::uint32_t);
  const std::uint64_t ram = physical_memory_bytes();
  if (ram != 0 && needed > ram / 2) {
    throw InvalidArgument("random-access matrix and index vector need " + std::to_string(needed >> 20) +
                          " MiB, more than half of physical memory");
  }

  const auto idx = random_indices(o.matrix_dim, o.op_count, o.seed);
  std::vector<std::int32_t> matrix(cells, 1);
  std::atomic<std::int64_t> sink{0};

  BenchReport r;
  r.name = o.mode == AccessMode::Read ? "random_read" : "random_write";
  r.unit = "MB/s";
  r.parameters = {{"matrix_dim", std::to_string(o.matrix_dim)},
                  {"op_count", std::to_string(o.op_count)},
                  {"workers", std::to_string(o.workers)},
                  {"element_bytes", "4"},
                  {"seed", std::to_string(o.seed)}};
  if (o.mode == AccessMode::Read) {
    r.reference = {{"cpu", 305.0}, {"mic", 399.0}, {"gpu", 895.0}};
  } else {
    r.reference = {{"cpu", 74.0}, {"mic", 16.0}, {"gpu", 126.0}};
  }

  for (int rep = 0; rep < o.repetitions; ++rep) {
    const auto t0 = Clock::now();
    parallel_blocks(idx.size(), o.workers, [&](std::size_t begin, std::size_t end) {
      if (o.mode == AccessMode::Read) {
        std::int64_t sum = 0;
        for (std::size_t k = begin; k < end; ++k) {
          sum += std::atomic_ref<std::int32_t>(matrix[idx[k]]).load(std::memory_order_relaxed);
        }
        sink.fetch_add(sum, std::memory_order_relaxed);
      } else {
        for (std::size_t k = begin; k < end; ++k) {
          std::atomic_ref<std::int32_t>(matrix[idx[k]]).store(static_cast<std::int32_t>(k), std::memory_order_relaxed);
        }
      }
    });
    const double secs = seconds_since(t0);
    r.samples.push_back(static_cast<double>(o.op_count) * sizeof(std::int32_t) / kMega / secs);
  }
  r.finalize();
  return r;
}

BenchReport bench_atomic_add(const AtomicAddOptions& o) {
  check_common(o.op_count, o.workers, o.repetitions);
  BenchReport r;
  r.name = o.mode == AtomicMode::SingleVariable ? "atomic_single_variable" : "atomic_per_worker_array";
  r.unit = "Mops/s";
  r.parameters = {{"op_count", std::to_string(o.op_count)}, {"workers", std::to_string(o.workers)}};
  if (o.mode == AtomicMode::SingleVariable) {
    r.reference = {{"cpu", 134.0}, {"mic", 55.0}, {"gpu", 693.0}};
  } else {
    r.reference = {{"cpu", 2200.0}, {"mic", 906.0}, {"gpu", 38630.0}};
  }

  const auto teams = static_cast<std::size_t>(o.workers);
  for (int rep = 0; rep < o.repetitions; ++rep) {
    std::vector<PaddedCounter> counters(o.mode == AtomicMode::SingleVariable ? 1 : teams);
    const auto t0 = Clock::now();
    parallel_blocks(teams, o.workers, [&](std::size_t begin, std::size_t end) {
      for (std::size_t w = begin; w < end; ++w) {
        auto& counter = counters[o.mode == AtomicMode::SingleVariable ? 0 : w].value;
        const std::uint64_t first = o.op_count * w / teams;
        const std::uint64_t last = o.op_count * (w + 1) / teams;
        for (std::uint64_t i = first; i < last; ++i) {
          counter.fetch_add(1, std::memory_order_relaxed);
        }
      }
    });
    const double secs = seconds_since(t0);
    std::uint64_t total = 0;
    for (const auto& c : counters) {
      total += c.value.load();
    }
    if (total != o.op_count) {
      throw IntegrityError(r.name + ": accumulated " + std::to_string(total) + ", expected " +
                           std::to_string(o.op_count));
    }
    r.samples.push_back(static_cast<double>(o.op_count) / kMega / secs);
  }
  r.parameters["final_total"] = std::to_string(o.op_count);
  r.finalize();
  return r;
}

std::optional<std::uint64_t> last_level_cache_bytes() {
  std::optional<std::uint64_t> best;
  int best_level = 0;
  for (int index = 0; index < 16; ++index) {
    const std::string dir = "/sys/devices/system/cpu/cpu0/cache/index" + std::to_string(index) + "/";
    std::ifstream level_file(dir + "level");
    std::ifstream size_file(dir + "size");
    int level = 0;
    std::string size;
    if (!(level_file >> level) || !(size_file >> size) || size.empty()) {
      continue;
    }
    std::uint64_t mult = 1;
    switch (size.back()) {
      case 'K': mult = 1024; size.pop_back(); break;
      case 'M': mult = 1024 * 1024; size.pop_back(); break;
      case 'G': mult = 1024 * 1024 * 1024; size.pop_back(); break;
      default: break;
    }
    try {
      const std::uint64_t bytes = std::stoull(size) * mult;
      if (level > best_level || (level == best_level && best && bytes > *best)) {
        best_level = level;
        best = bytes;
      }
    } catch (const std::exception&) {
    }
  }
  return best;
}

std::uint64_t default_stream_bytes() {
  const std::uint64_t want = 4 * last_level_cache_bytes().value_or(std::uint64_t{32} << 20);
  const std::uint64_t ram = physical_memory_bytes();
  return ram == 0 ? want : std::min(want, ram / 4);
}

BenchReport bench_stream(const StreamOptions& o) {
  const std::uint64_t bytes = o.array_bytes == 0 ? default_stream_bytes() : o.array_bytes;
  const std::uint64_t count = bytes / sizeof(double);
  if (count == 0) {
    throw InvalidArgument("stream array must hold at least one element");
  }
  check_common(count, o.workers, o.repetitions);
  const std::uint64_t ram = physical_memory_bytes();
  if (ram != 0 && 2 * bytes > ram / 2 + ram / 4) {
    throw InvalidArgument("stream arrays of " + std::to_string(bytes >> 20) + " MiB do not fit in memory");
  }

  std::vector<double> a(count);
  std::vector<double> b(count);
  parallel_blocks(count, o.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      a[i] = static_cast<double>(i);
      b[i] = 0.0;
    }
  });

  BenchReport r;
  r.name = "stream_copy";
  r.unit = "MB/s";
  const auto llc = last_level_cache_bytes();
  r.parameters = {{"array_bytes", std::to_string(count * sizeof(double))},
                  {"workers", std::to_string(o.workers)},
                  {"llc_bytes", llc ? std::to_string(*llc) : "unknown"},
                  {"meets_cache_rule", llc && count * sizeof(double) >= 4 * *llc ? "true" : "false"}};
  for (int rep = 0; rep < o.repetitions; ++rep) {
    const auto t0 = Clock::now();
    parallel_blocks(count, o.workers, [&](std::size_t begin, std::size_t end) {
      std::copy(a.begin() + static_cast<std::ptrdiff_t>(begin), a.begin() + static_cast<std::ptrdiff_t>(end),
                b.begin() + static_cast<std::ptrdiff_t>(begin));
    });
    const double secs = seconds_since(t0);
    r.samples.push_back(2.0 * static_cast<double>(count * sizeof(double)) / kMega / secs);
  }
  if (b[count - 1] != a[count - 1]) {
    throw IntegrityError("stream copy produced a wrong value");
  }
  r.finalize();
  return r;
}

void append_reports(const std::filesystem::path& path, const std::vector<BenchReport>& reports) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw Error("cannot open " + path.string() + " for appending");
  }
  for (const auto& r : reports) {
    out << r.to_json_line() << '\n';
  }
}

}  // namespace wsiflow
