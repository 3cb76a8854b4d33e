#include <chrono>

#include "grem/error.hpp"
#include "grem/io.hpp"

namespace grem::io {

RunManifest run_pipeline(const ExperimentConfig& config) {
  validate_config(config);
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path out = config.out_dir;
  fs::create_directories(out);

  RunManifest manifest;
  manifest.seed = config.seed;
  const json cfg = to_json(config);
  manifest.config_hash = sha256_hex(cfg.dump());

  std::string stage = "config";
  auto emit = [&](const fs::path& rel, const std::string& text, const char* format) {
    write_text(out / rel, text);
    manifest.files.push_back({rel.generic_string(), format, stage});
  };
  auto finish = [&]() {
    manifest.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_json(out / "manifest.json", to_json(manifest));
  };

  try {
    emit("config.json", cfg.dump(2) + "\n", kConfigFormat);
    std::vector<stats::StatsReport> reports;
    for (int n : config.n_grid) {
      ModelSpec spec = config.spec;
      spec.schedule = spec.schedule.with_n(n);
      const fs::path dir = "n" + std::to_string(n);

      stage = "calibrate:n=" + std::to_string(n);
      const CalibratedParams params = calibrate(spec);
      emit(dir / "params.json", to_json(params).dump(2) + "\n", kParamsFormat);

      stage = "simulate:n=" + std::to_string(n);
      const SimulationSetup setup = make_setup(spec, params, config.prune, config.window);
      const auto batch = run_batch(setup, config.seed, config.replicates, config.threads);
      emit(dir / "points.csv", points_csv(batch), kPointsFormat);
      emit(dir / "replicates.csv", replicates_csv(batch), kReplicatesFormat);

      stage = "analyze:n=" + std::to_string(n);
      stats::AnalyzeOptions opts = config.analyze;
      opts.seed = config.seed;
      const stats::StatsReport rep = stats::analyze(batch, spec, params, setup.window, opts);
      emit(dir / "laplace.csv", laplace_csv(rep), kTableFormat);
      emit(dir / "counts.csv", counts_csv(rep), kTableFormat);
      emit(dir / "overlap.csv", overlap_csv(rep), kTableFormat);
      emit(dir / "barrier.csv", barrier_csv(rep), kTableFormat);
      emit(dir / "report.json", to_json(rep).dump(2) + "\n", kReportFormat);
      reports.push_back(rep);
    }
    stage = "analyze:summary";
    emit("ks.csv", ks_csv(reports), kTableFormat);
  } catch (const std::exception& e) {
    manifest.complete = false;
    manifest.failed_stage = stage;
    manifest.error = e.what();
    finish();
    throw;
  }
  manifest.complete = true;
  finish();
  return manifest;
}

}  // namespace grem::io
