#include "wsiflow/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <iomanip>
#include <memory>
#include <mutex>
#include <thread>

#include "wsiflow/iwpp_ops.hpp"
#include "wsiflow/labeling.hpp"

namespace wsiflow {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <class T>
const T& need(const std::optional<T>& v, OpKind op, const char* what) {
  if (!v) {
    throw Error(std::string(op_name(op)) + ": " + what + " has not been computed");
  }
  return *v;
}

WavefrontOptions wavefront(const PipelineConfig& cfg) {
  WavefrontOptions o;
  o.workers = cfg.kernel_workers;
  return o;
}

void run_rgb_to_gray(TileContext& ctx, const PipelineConfig& cfg) {
  ctx.gray = rgb_to_gray(ctx.rgb, cfg.kernel_workers);
}

void run_morph_open(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& gray = need(ctx.gray, OpKind::MorphOpen, "gray tile");
  ctx.opened = morph_open(invert(gray), StructuringElement::disk(cfg.open_radius), cfg.kernel_workers);
}

void run_reconstruction(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& gray = need(ctx.gray, OpKind::MorphReconstruction, "gray tile");
  const auto& opened = need(ctx.opened, OpKind::MorphReconstruction, "opened tile");
  const ImageTile recon = morph_reconstruction(opened, invert(gray), wavefront(cfg));
  ctx.foreground = threshold_mask(recon, cfg.foreground_threshold);
}

void run_fill_holes(TileContext& ctx, const PipelineConfig& cfg) {
  ctx.filled = fill_holes(need(ctx.foreground, OpKind::FillHoles, "foreground mask"), Connectivity::Four,
                          wavefront(cfg));
}

void run_area_threshold(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& filled = need(ctx.filled, OpKind::AreaThreshold, "filled mask");
  const LabelMap labels = connected_components(filled, cfg.connectivity, cfg.kernel_workers, cfg.kernel_workers);
  ctx.survivors = mask_from_labels(area_threshold(labels, cfg.min_area, cfg.max_area, cfg.kernel_workers));
}

void run_connected_components(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& survivors = need(ctx.survivors, OpKind::ConnectedComponents, "area-filtered mask");
  ctx.labels = connected_components(survivors, cfg.connectivity, cfg.kernel_workers, cfg.kernel_workers);
  ctx.objects = extract_objects(*ctx.labels);
}

void run_distance_transform(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& survivors = need(ctx.survivors, OpKind::DistanceTransform, "area-filtered mask");
  WavefrontOptions o = wavefront(cfg);
  o.scan_sweeps = 0;
  ctx.distance = distance_transform(survivors, o);
}

void run_color_deconvolution(TileContext& ctx, const PipelineConfig& cfg) {
  ctx.stains = color_deconvolution(ctx.rgb, cfg.stains, cfg.kernel_workers);
}

void run_pixel_stats(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& stains = need(ctx.stains, OpKind::PixelStats, "stain planes");
  const auto& labels = need(ctx.labels, OpKind::PixelStats, "label map");
  ctx.intensity = pixel_stats(stains[0], ctx.objects, labels, cfg.kernel_workers);
}

void run_gradient_stats(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& gray = need(ctx.gray, OpKind::GradientStats, "gray tile");
  const auto& labels = need(ctx.labels, OpKind::GradientStats, "label map");
  ctx.gradient = gradient_stats(gray, ctx.objects, labels, cfg.kernel_workers);
}

void run_sobel_edge_stats(TileContext& ctx, const PipelineConfig& cfg) {
  const auto& gray = need(ctx.gray, OpKind::SobelEdgeStats, "gray tile");
  const auto& labels = need(ctx.labels, OpKind::SobelEdgeStats, "label map");
  ctx.edge = sobel_edge_stats(gray, ctx.objects, labels, cfg.edge_threshold, cfg.kernel_workers);
}

}  // namespace

std::vector<FeatureVector> TileContext::features() const {
  return assemble_features(objects, intensity, gradient, edge);
}

void KernelRegistry::add(OpKind op, std::string device_class, Kernel kernel) {
  variants_[static_cast<std::size_t>(op)][std::move(device_class)] = std::move(kernel);
}

const Kernel& KernelRegistry::get(OpKind op, const std::string& device_class) const {
  const auto& m = variants_[static_cast<std::size_t>(op)];
  const auto it = m.find(device_class);
  if (it == m.end()) {
    throw InvalidArgument("no " + device_class + " variant registered for " + std::string(op_name(op)));
  }
  return it->second;
}

bool KernelRegistry::has(OpKind op, const std::string& device_class) const {
  return variants_[static_cast<std::size_t>(op)].contains(device_class);
}

KernelRegistry default_registry() {
  KernelRegistry r;
  const std::string cpu(kCpuCore);
  r.add(OpKind::RgbToGray, cpu, run_rgb_to_gray);
  r.add(OpKind::MorphOpen, cpu, run_morph_open);
  r.add(OpKind::MorphReconstruction, cpu, run_reconstruction);
  r.add(OpKind::FillHoles, cpu, run_fill_holes);
  r.add(OpKind::AreaThreshold, cpu, run_area_threshold);
  r.add(OpKind::ConnectedComponents, cpu, run_connected_components);
  r.add(OpKind::DistanceTransform, cpu, run_distance_transform);
  r.add(OpKind::ColorDeconvolution, cpu, run_color_deconvolution);
  r.add(OpKind::PixelStats, cpu, run_pixel_stats);
  r.add(OpKind::GradientStats, cpu, run_gradient_stats);
  r.add(OpKind::SobelEdgeStats, cpu, run_sobel_edge_stats);
  return r;
}

std::vector<FeatureVector> process_tile(const ImageTile& rgb, const PipelineConfig& config) {
  const KernelRegistry registry = default_registry();
  TileContext ctx(rgb);
  for (OpKind op : kAllOps) {
    registry.get(op)(ctx, config);
  }
  return ctx.features();
}

TaskFailure::TaskFailure(std::size_t task, std::size_t tile, OpKind op, const std::string& what)
    : Error("task " + std::to_string(task) + " (" + std::string(op_name(op)) + " on tile " + std::to_string(tile) +
            ") failed: " + what),
      task_(task),
      tile_(tile),
      op_(op) {}

RealRunResult run_real(const TaskGraph& graph, const std::vector<ImageTile>& tiles, int workers,
                       const PipelineConfig& config, const KernelRegistry& registry) {
  if (workers < 1) {
    throw InvalidArgument("run_real: worker count must be >= 1");
  }
  graph.validate();
  if (tiles.size() < graph.tile_count()) {
    throw InvalidArgument("run_real: graph references " + std::to_string(graph.tile_count()) + " tiles, got " +
                          std::to_string(tiles.size()));
  }
  for (const auto& t : graph.tasks()) {
    (void)registry.get(t.op);
  }

  const auto start = Clock::now();
  std::vector<std::unique_ptr<TileContext>> contexts;
  contexts.reserve(graph.tile_count());
  for (std::size_t t = 0; t < graph.tile_count(); ++t) {
    contexts.push_back(std::make_unique<TileContext>(tiles[t]));
  }

  RealRunResult result;
  for (OpKind op : kAllOps) {
    result.timing[static_cast<std::size_t>(op)].op = op;
  }

  std::mutex mutex;
  std::condition_variable cv;
  std::deque<std::size_t> ready;
  std::vector<std::size_t> remaining(graph.size());
  std::size_t unfinished = graph.size();
  std::size_t running = 0;
  std::optional<TaskFailure> failure;
  for (std::size_t t = 0; t < graph.size(); ++t) {
    remaining[t] = graph.predecessors(t).size();
    if (remaining[t] == 0) {
      ready.push_back(t);
    }
  }

  const auto worker = [&] {
    std::unique_lock lock(mutex);
    for (;;) {
      cv.wait(lock, [&] { return !ready.empty() || unfinished == 0 || failure.has_value(); });
      if (failure || unfinished == 0) {
        return;
      }
      const std::size_t id = ready.front();
      ready.pop_front();
      ++running;
      lock.unlock();

      const auto& task = graph.task(id);
      const auto t0 = Clock::now();
      std::optional<std::string> error;
      try {
        registry.get(task.op)(*contexts[task.tile], config);
      } catch (const std::exception& e) {
        error = e.what();
      }
      const double ms = elapsed_ms(t0);

      lock.lock();
      --running;
      if (error) {
        if (!failure) {
          failure.emplace(id, task.tile, task.op, *error);
        }
        cv.notify_all();
        return;
      }
      auto& timing = result.timing[static_cast<std::size_t>(task.op)];
      ++timing.calls;
      timing.total_ms += ms;
      --unfinished;
      for (std::size_t s : graph.successors(id)) {
        if (--remaining[s] == 0) {
          ready.push_back(s);
        }
      }
      cv.notify_all();
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(worker);
    }
  }
  if (failure) {
    throw *failure;
  }

  result.features.reserve(contexts.size());
  for (const auto& ctx : contexts) {
    result.features.push_back(ctx->features());
  }
  result.wall_ms = elapsed_ms(start);
  return result;
}

void write_timing_csv(std::ostream& out, const std::array<OpTiming, kOpKindCount>& timing) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::fixed << std::setprecision(3);
  out << "op,calls,total_ms,mean_ms\n";
  for (const auto& t : timing) {
    out << op_name(t.op) << ',' << t.calls << ',' << t.total_ms << ','
        << (t.calls > 0 ? t.total_ms / static_cast<double>(t.calls) : 0.0) << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

DeviceProfile calibrate_profile(const ImageTile& tile, int workers, int cpu_cores, int repetitions,
                                const PipelineConfig& config) {
  if (workers < 1 || cpu_cores < 0 || repetitions < 1) {
    throw InvalidArgument("calibrate_profile: workers >= 1, cpu_cores >= 0 and repetitions >= 1 required");
  }
  const KernelRegistry registry = default_registry();
  const auto measure = [&](int kernel_workers) {
    PipelineConfig cfg = config;
    cfg.kernel_workers = kernel_workers;
    std::array<std::vector<double>, kOpKindCount> samples;
    for (int rep = 0; rep < repetitions; ++rep) {
      TileContext ctx(tile);
      for (OpKind op : kAllOps) {
        const auto t0 = Clock::now();
        registry.get(op)(ctx, cfg);
        samples[static_cast<std::size_t>(op)].push_back(elapsed_ms(t0));
      }
    }
    std::array<double, kOpKindCount> median{};
    for (std::size_t i = 0; i < kOpKindCount; ++i) {
      auto& s = samples[i];
      std::sort(s.begin(), s.end());
      median[i] = std::max(s[(s.size() - 1) / 2], 1e-6);
    }
    return median;
  };

  const auto sequential = measure(1);
  const auto team = measure(workers);
  DeviceProfile p;
  p.classes = {{"accelerator", 1}};
  if (cpu_cores > 0) {
    p.classes.push_back({std::string(kCpuCore), cpu_cores});
  }
  p.base_cost_ms = sequential;
  std::array<double, kOpKindCount> speedup{};
  for (std::size_t i = 0; i < kOpKindCount; ++i) {
    speedup[i] = sequential[i] / team[i];
  }
  p.speedup.push_back(speedup);
  if (cpu_cores > 0) {
    std::array<double, kOpKindCount> one{};
    one.fill(1.0);
    p.speedup.push_back(one);
  }
  p.validate();
  return p;
}

}  // namespace wsiflow
