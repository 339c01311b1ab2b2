#include "wsiflow/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "wsiflow/bench.hpp"
#include "wsiflow/device_profile.hpp"
#include "wsiflow/error.hpp"
#include "wsiflow/pipeline.hpp"
#include "wsiflow/pnm_io.hpp"
#include "wsiflow/scheduler.hpp"
#include "wsiflow/synthetic.hpp"
#include "wsiflow/trace.hpp"

namespace wsiflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Bad flags, config values or paths: exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

using Setter = std::function<void(const json&)>;

template <class T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

// Values from the config file replace whatever the flags said.
void apply_config(const std::string& path, const std::map<std::string, Setter>& keys) {
  if (path.empty()) {
    return;
  }
  std::ifstream in(path);
  if (!in) {
    throw UsageError("config file not found: " + path);
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!doc.is_object()) {
    throw UsageError("config file " + path + ": expected a JSON object");
  }
  for (const auto& [key, value] : doc.items()) {
    const auto it = keys.find(key);
    if (it == keys.end()) {
      throw UsageError("config file " + path + ": unknown key '" + key + "'");
    }
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw UsageError("config file " + path + ": bad value for '" + key + "': " + e.what());
    }
  }
}

void require(bool ok, const std::string& message) {
  if (!ok) {
    throw UsageError(message);
  }
}

fs::path prepare_out_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) {
    throw Error("cannot create output directory " + dir + ": " + ec.message());
  }
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path);
  if (!f) {
    throw Error("cannot write " + path.string());
  }
  return f;
}

// ---------------------------------------------------------------- pipeline

struct PipelineArgs {
  int tiles = 4;
  int tile_size = 512;
  int objects = 24;
  int workers = 1;
  int kernel_workers = 1;
  std::uint64_t seed = 1;
  std::string input_dir;
  std::string out = "wsiflow-out";
  bool plot = false;
  std::string config;
};

std::vector<ImageTile> load_input_tiles(const std::string& dir) {
  if (!fs::is_directory(dir)) {
    throw UsageError("input directory not found: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    throw UsageError("input directory " + dir + " holds no .ppm tiles");
  }
  std::vector<ImageTile> tiles;
  tiles.reserve(files.size());
  for (const auto& f : files) {
    tiles.push_back(read_tile(f));
  }
  return tiles;
}

int cmd_pipeline(PipelineArgs a, std::ostream& out) {
  apply_config(a.config, {{"tiles", set(a.tiles)},
                          {"tile-size", set(a.tile_size)},
                          {"objects", set(a.objects)},
                          {"workers", set(a.workers)},
                          {"kernel-workers", set(a.kernel_workers)},
                          {"seed", set(a.seed)},
                          {"input-dir", set(a.input_dir)},
                          {"out", set(a.out)},
                          {"plot", set(a.plot)}});
  require(a.workers >= 1, "--workers must be >= 1");
  require(a.kernel_workers >= 1, "--kernel-workers must be >= 1");
  require(a.tiles >= 1, "--tiles must be >= 1");
  require(a.tile_size >= 8, "--tile-size must be >= 8");
  require(a.objects >= 0, "--objects must be >= 0");

  std::vector<ImageTile> tiles;
  if (!a.input_dir.empty()) {
    tiles = load_input_tiles(a.input_dir);
  } else {
    for (int t = 0; t < a.tiles; ++t) {
      tiles.push_back(make_synthetic_tile(a.tile_size, a.tile_size, a.objects, a.seed + static_cast<std::uint64_t>(t)));
    }
  }

  PipelineConfig cfg;
  cfg.kernel_workers = a.kernel_workers;
  const TaskGraph graph = build_task_graph(tiles.size());
  const RealRunResult result = run_real(graph, tiles, a.workers, cfg);

  const fs::path dir = prepare_out_dir(a.out);
  std::size_t objects = 0;
  for (std::size_t t = 0; t < result.features.size(); ++t) {
    std::ostringstream name;
    name << "features_tile_" << std::setw(4) << std::setfill('0') << t << ".csv";
    auto f = open_out(dir / name.str());
    write_features_csv(f, result.features[t]);
    objects += result.features[t].size();
  }
  {
    auto f = open_out(dir / "timing.csv");
    write_timing_csv(f, result.timing);
  }
  if (a.plot) {
    auto f = open_out(dir / "timing.dat");
    f << "# op total_ms\n";
    for (const auto& t : result.timing) {
      f << op_name(t.op) << ' ' << t.total_ms << '\n';
    }
  }

  out << "tiles " << tiles.size() << ", objects " << objects << ", workers " << a.workers << ", wall "
      << std::fixed << std::setprecision(1) << result.wall_ms << " ms\n";
  write_timing_csv(out, result.timing);
  out << "wrote " << (dir / "timing.csv").string() << " and " << result.features.size() << " feature files\n";
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string profile;
  std::string preset = "fig3-like";
  std::size_t tiles = 356;  // per node
  std::vector<int> nodes = {1, 2, 4, 8, 16, 32, 64, 128, 192};
  std::string policy = "pats";
  int prefetch = 2;
  std::optional<double> io_base_ms;
  std::optional<double> alpha;
  std::optional<double> fit_efficiency;
  bool trace = false;
  std::string out = "wsiflow-out";
  bool plot = false;
  std::string config;
};

int cmd_simulate(SimulateArgs a, std::ostream& out) {
  apply_config(a.config, {{"profile", set(a.profile)},
                          {"preset", set(a.preset)},
                          {"tiles", set(a.tiles)},
                          {"nodes", set(a.nodes)},
                          {"policy", set(a.policy)},
                          {"prefetch", set(a.prefetch)},
                          {"io-base-ms", [&](const json& v) { a.io_base_ms = v.get<double>(); }},
                          {"alpha", [&](const json& v) { a.alpha = v.get<double>(); }},
                          {"fit-efficiency", [&](const json& v) { a.fit_efficiency = v.get<double>(); }},
                          {"trace", set(a.trace)},
                          {"out", set(a.out)},
                          {"plot", set(a.plot)}});
  const auto policy = policy_from_name(a.policy);
  require(policy.has_value(), "--policy must be fcfs or pats");
  require(a.tiles >= 1, "--tiles must be >= 1");
  require(a.prefetch >= 1, "--prefetch must be >= 1");
  require(!a.nodes.empty(), "--nodes needs at least one node count");
  for (int n : a.nodes) {
    require(n >= 1, "node counts must be >= 1");
  }

  DeviceProfile profile;
  if (!a.profile.empty()) {
    require(fs::exists(a.profile), "profile not found: " + a.profile);
    profile = load_profile(a.profile);
  } else {
    profile = preset_profile(a.preset);
  }
  if (a.io_base_ms) {
    profile.io.base_read_ms = *a.io_base_ms;
  }
  if (a.alpha) {
    profile.io.alpha = *a.alpha;
  }
  profile.validate();

  SimOptions base;
  base.prefetch_depth = a.prefetch;
  base.io = profile.io;
  const auto fcfs = weak_scaling(profile, Policy::Fcfs, a.tiles, a.nodes, base);
  const auto pats = weak_scaling(profile, Policy::Pats, a.tiles, a.nodes, base);

  const fs::path dir = prepare_out_dir(a.out);
  auto csv = open_out(dir / "simulate.csv");
  std::ostringstream table;
  table << std::setprecision(10);
  table << "nodes,tiles,makespan_fcfs_ms,makespan_pats_ms,fcfs_over_pats,efficiency_fcfs,efficiency_pats\n";
  std::vector<MetricsRow> metrics;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    table << fcfs[i].nodes << ',' << fcfs[i].tiles << ',' << fcfs[i].makespan << ',' << pats[i].makespan << ','
          << fcfs[i].makespan / pats[i].makespan << ',' << fcfs[i].efficiency << ',' << pats[i].efficiency << '\n';
  }
  csv << table.str();
  out << table.str();

  const std::size_t last = a.nodes.size() - 1;
  out << "pats speedup over fcfs at " << a.nodes[last] << " nodes: " << std::setprecision(4)
      << fcfs[last].makespan / pats[last].makespan << "x (published reference: 1.29x)\n";
  out << (*policy == Policy::Pats ? "pats" : "fcfs") << " efficiency at " << a.nodes[last]
      << " nodes: " << (*policy == Policy::Pats ? pats : fcfs)[last].efficiency
      << " (published reference: about 0.84 at 192 nodes)\n";

  for (const auto* rows : {&fcfs, &pats}) {
    const Policy p = rows == &fcfs ? Policy::Fcfs : Policy::Pats;
    for (const auto& r : *rows) {
      metrics.push_back({r.nodes, r.tiles, p, r.makespan, r.efficiency, 0.0});
    }
  }
  // Utilization needs the per-device metrics of each run; recompute at the largest node count only.
  for (auto& m : metrics) {
    if (m.nodes == a.nodes[last]) {
      SimOptions o = base;
      o.nodes = m.nodes;
      o.keep_trace = false;
      const auto res = simulate(build_task_graph(m.tiles), profile, m.policy, o);
      double sum = 0.0;
      for (double u : res.metrics.utilization) {
        sum += u;
      }
      m.mean_utilization = sum / static_cast<double>(res.metrics.utilization.size());
    }
  }
  {
    auto f = open_out(dir / "metrics.csv");
    write_metrics_csv(f, metrics);
  }

  if (a.trace) {
    const TaskGraph graph = build_task_graph(a.tiles);
    SimOptions o = base;
    const auto res = simulate(graph, profile, *policy, o);
    const auto report = validate_trace(graph, res.trace, &profile);
    if (!report.ok()) {
      throw Error("simulated trace failed validation: " + report.violations.front());
    }
    auto f = open_out(dir / ("trace_" + a.policy + ".jsonl"));
    write_trace_jsonl(f, graph, res.trace);
    out << "wrote " << (dir / ("trace_" + a.policy + ".jsonl")).string() << '\n';
  }

  if (a.fit_efficiency) {
    require(base.io.base_read_ms > 0.0, "--fit-efficiency needs a positive --io-base-ms");
    const double alpha =
        fit_contention_alpha(profile, *policy, a.tiles, a.nodes[last], *a.fit_efficiency, base);
    out << "alpha for efficiency " << *a.fit_efficiency << " at " << a.nodes[last] << " nodes: " << std::setprecision(6)
        << alpha << '\n';
  }

  if (a.plot) {
    auto f = open_out(dir / "scaling.dat");
    f << "# nodes efficiency_fcfs efficiency_pats makespan_fcfs_ms makespan_pats_ms\n";
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      f << fcfs[i].nodes << ' ' << fcfs[i].efficiency << ' ' << pats[i].efficiency << ' ' << fcfs[i].makespan << ' '
        << pats[i].makespan << '\n';
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string suite = "all";
  int workers = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  std::uint64_t ops = 10'000'000;
  int matrix_dim = 4096;
  std::uint64_t stream_bytes = 0;
  int repetitions = 3;
  std::uint64_t seed = 42;
  std::string out = "wsiflow-out";
  std::string config;
};

void print_report(std::ostream& out, const BenchReport& r) {
  out << "  " << r.name << ": median " << std::fixed << std::setprecision(1) << r.median << ' ' << r.unit << " (min "
      << r.min << ", max " << r.max << ", " << r.repetitions() << " reps)";
  if (!r.reference.empty()) {
    out << "  published reference:";
    for (const auto& [device, value] : r.reference) {
      out << ' ' << device << '=' << value;
    }
  }
  out << '\n';
  out.unsetf(std::ios::fixed);
}

int cmd_bench(BenchArgs a, std::ostream& out) {
  apply_config(a.config, {{"suite", set(a.suite)},
                          {"workers", set(a.workers)},
                          {"ops", set(a.ops)},
                          {"matrix-dim", set(a.matrix_dim)},
                          {"stream-bytes", set(a.stream_bytes)},
                          {"repetitions", set(a.repetitions)},
                          {"seed", set(a.seed)},
                          {"out", set(a.out)}});
  const std::vector<std::string> suites = {"random", "atomic", "stream"};
  require(a.suite == "all" || std::find(suites.begin(), suites.end(), a.suite) != suites.end(),
          "unknown suite '" + a.suite + "' (expected random, atomic, stream or all)");
  require(a.workers >= 1, "--workers must be >= 1");
  require(a.repetitions >= 3, "--repetitions must be >= 3");

  const fs::path file = prepare_out_dir(a.out) / "bench.jsonl";
  for (const auto& suite : suites) {
    if (a.suite != "all" && a.suite != suite) {
      continue;
    }
    std::vector<BenchReport> reports;
    if (suite == "random") {
      for (AccessMode mode : {AccessMode::Read, AccessMode::Write}) {
        reports.push_back(bench_random_access({a.matrix_dim, a.ops, mode, a.workers, a.repetitions, a.seed}));
      }
    } else if (suite == "atomic") {
      for (AtomicMode mode : {AtomicMode::SingleVariable, AtomicMode::PerWorkerArray}) {
        reports.push_back(bench_atomic_add({mode, a.ops, a.workers, a.repetitions}));
      }
    } else {
      reports.push_back(bench_stream({a.stream_bytes, a.workers, a.repetitions}));
    }
    out << '[' << suite << "]\n";
    for (const auto& r : reports) {
      print_report(out, r);
    }
    append_reports(file, reports);
  }
  out << "appended to " << file.string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- profile

struct ProfileArgs {
  std::string preset;
  bool calibrate = false;
  int workers = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
  int cpu_cores = 4;
  int tile_size = 512;
  int repetitions = 3;
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
};

int cmd_profile(ProfileArgs a, std::ostream& out) {
  apply_config(a.config, {{"preset", set(a.preset)},
                          {"calibrate", set(a.calibrate)},
                          {"workers", set(a.workers)},
                          {"cpu-cores", set(a.cpu_cores)},
                          {"tile-size", set(a.tile_size)},
                          {"repetitions", set(a.repetitions)},
                          {"seed", set(a.seed)},
                          {"out", set(a.out)}});
  require(a.calibrate != !a.preset.empty(), "give exactly one of --preset NAME or --calibrate");
  DeviceProfile profile;
  if (a.calibrate) {
    require(a.workers >= 1 && a.cpu_cores >= 0 && a.repetitions >= 1 && a.tile_size >= 32,
            "--calibrate needs --workers >= 1, --cpu-cores >= 0, --repetitions >= 1, --tile-size >= 32");
    const ImageTile tile = make_synthetic_tile(a.tile_size, a.tile_size, a.tile_size / 24, a.seed);
    profile = calibrate_profile(tile, a.workers, a.cpu_cores, a.repetitions);
  } else {
    profile = preset_profile(a.preset);
  }
  const std::string text = profile_to_json(profile);
  if (a.out.empty()) {
    out << text;
  } else {
    const fs::path p(a.out);
    if (p.has_parent_path()) {
      fs::create_directories(p.parent_path());
    }
    auto f = open_out(p);
    f << text;
    out << "wrote " << a.out << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tile-based nuclear segmentation and feature pipeline, scheduler simulator and micro-benchmarks",
               "wsiflow"};
  app.require_subcommand(1);

  PipelineArgs pa;
  auto* pipeline = app.add_subcommand("pipeline", "Segment tiles and compute per-object features");
  pipeline->add_option("--tiles", pa.tiles, "Number of synthetic tiles")->capture_default_str();
  pipeline->add_option("--tile-size", pa.tile_size, "Synthetic tile edge in pixels")->capture_default_str();
  pipeline->add_option("--objects", pa.objects, "Nuclei per synthetic tile")->capture_default_str();
  pipeline->add_option("--workers", pa.workers, "Executor threads")->capture_default_str();
  pipeline->add_option("--kernel-workers", pa.kernel_workers, "Threads inside each kernel")->capture_default_str();
  pipeline->add_option("--seed", pa.seed, "Seed of the first synthetic tile")->capture_default_str();
  pipeline->add_option("--input-dir", pa.input_dir, "Read .ppm tiles from this directory instead");
  pipeline->add_option("--out", pa.out, "Output directory")->capture_default_str();
  pipeline->add_flag("--plot", pa.plot, "Also write gnuplot data files");
  pipeline->add_option("--config", pa.config, "JSON file whose keys override flags");

  SimulateArgs sa;
  auto* simulate_cmd = app.add_subcommand("simulate", "Compare FCFS and PATS under weak scaling");
  simulate_cmd->add_option("--profile", sa.profile, "Device profile JSON");
  simulate_cmd->add_option("--preset", sa.preset, "Built-in profile when --profile is absent")
      ->check(CLI::IsMember(preset_names()))
      ->capture_default_str();
  simulate_cmd->add_option("--tiles", sa.tiles, "Tiles per node")->capture_default_str();
  simulate_cmd->add_option("--nodes", sa.nodes, "Node counts")->delimiter(',');
  simulate_cmd->add_option("--policy", sa.policy, "Policy for --trace and --fit-efficiency")
      ->check(CLI::IsMember({"fcfs", "pats"}))
      ->capture_default_str();
  simulate_cmd->add_option("--prefetch", sa.prefetch, "Compute window, in tiles per device")->capture_default_str();
  simulate_cmd->add_option("--io-base-ms", sa.io_base_ms, "Tile read latency with one reader");
  simulate_cmd->add_option("--alpha", sa.alpha, "Read contention coefficient");
  simulate_cmd->add_option("--fit-efficiency", sa.fit_efficiency,
                           "Report the alpha giving this efficiency at the largest node count");
  simulate_cmd->add_flag("--trace", sa.trace, "Write the one-node schedule as JSON lines");
  simulate_cmd->add_option("--out", sa.out, "Output directory")->capture_default_str();
  simulate_cmd->add_flag("--plot", sa.plot, "Also write gnuplot data files");
  simulate_cmd->add_option("--config", sa.config, "JSON file whose keys override flags");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Memory and atomic micro-benchmarks");
  bench->add_option("--suite", ba.suite, "random, atomic, stream or all")->capture_default_str();
  bench->add_option("--workers", ba.workers, "Threads")->capture_default_str();
  bench->add_option("--ops", ba.ops, "Operations per random-access and atomic run")->capture_default_str();
  bench->add_option("--matrix-dim", ba.matrix_dim, "Random-access matrix edge")->capture_default_str();
  bench->add_option("--stream-bytes", ba.stream_bytes, "Stream array size (0: 4x last-level cache)")
      ->capture_default_str();
  bench->add_option("--repetitions", ba.repetitions, "Runs per benchmark")->capture_default_str();
  bench->add_option("--seed", ba.seed, "Seed of the random index vector")->capture_default_str();
  bench->add_option("--out", ba.out, "Output directory; reports go to bench.jsonl")->capture_default_str();
  bench->add_option("--config", ba.config, "JSON file whose keys override flags");

  ProfileArgs fa;
  auto* profile = app.add_subcommand("profile", "Write a device profile");
  profile->add_option("--preset", fa.preset, "Built-in profile")->check(CLI::IsMember(preset_names()));
  profile->add_flag("--calibrate", fa.calibrate, "Measure kernel speedups on this machine");
  profile->add_option("--workers", fa.workers, "Kernel threads of the measured team")->capture_default_str();
  profile->add_option("--cpu-cores", fa.cpu_cores, "cpu-core devices in the written profile")->capture_default_str();
  profile->add_option("--tile-size", fa.tile_size, "Calibration tile edge")->capture_default_str();
  profile->add_option("--repetitions", fa.repetitions, "Runs per measurement")->capture_default_str();
  profile->add_option("--seed", fa.seed, "Calibration tile seed")->capture_default_str();
  profile->add_option("--out", fa.out, "Output file (default: stdout)");
  profile->add_option("--config", fa.config, "JSON file whose keys override flags");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (pipeline->parsed()) {
      return cmd_pipeline(pa, out);
    }
    if (simulate_cmd->parsed()) {
      return cmd_simulate(sa, out);
    }
    if (bench->parsed()) {
      return cmd_bench(ba, out);
    }
    return cmd_profile(fa, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace wsiflow
