#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "grem/error.hpp"
#include "grem/io.hpp"
#include "grem/manytoone.hpp"
#include "grem/rwlab.hpp"

using namespace grem;
namespace fs = std::filesystem;

namespace {

unsigned resolve_threads(int flag) {
  if (flag > 0) return static_cast<unsigned>(flag);
  if (const char* env = std::getenv("GREM_THREADS")) {
    try {
      const int v = std::stoi(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    fail(ErrorKind::validation, std::string("GREM_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

void print_params(const CalibratedParams& p) {
  std::printf("%-12s %.17g\n", "theta_star", p.theta_star);
  std::printf("%-12s %.17g\n", "v", p.v);
  std::printf("%-12s %.17g\n", "sigma2", p.sigma2);
  std::printf("%-12s %.17g\n", "m_n", p.m_n);
  std::printf("%-12s %.17g\n", "a_n", p.a_n);
  std::printf("%-12s %.17g\n", "c_n", p.c_n);
  std::printf("%-12s %.17g\n", "d_n", p.d_n);
  std::printf("%-12s %d\n", "n", p.n);
  std::printf("%-12s %d\n", "k_n", p.k_n);
  std::printf("%-12s %d\n", "b_n", p.b_n);
  if (p.schedule_warning) std::printf("warning: d_n^2 >= b_n, the schedule is outside the asymptotic regime\n");
}

ModelSpec load_spec(const std::string& path) {
  if (path.empty()) fail(ErrorKind::validation, "--config is required");
  const ModelSpec spec = io::spec_from_json(io::read_json(path));
  const auto report = validate_spec(spec);
  if (!report.ok()) fail(ErrorKind::validation, "invalid model spec\n" + report.failures());
  return spec;
}

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (out_dir.empty()) {
    std::cout << text;
  } else {
    io::write_text(fs::path(out_dir) / name, text);
  }
}

rwlab::CheckReport renewal_report(const rwlab::RenewalOptions& ro, const std::vector<double>& xs) {
  const auto builder = rwlab::standard_gaussian_builder();
  const auto table = rwlab::renewal_L(builder, ro);
  rwlab::RenewalOptions coarse_opt = ro;
  coarse_opt.h = 2 * ro.h;
  const auto coarse = rwlab::renewal_L(builder, coarse_opt);
  const auto law = builder(ro.h);
  rwlab::CheckReport rep{"renewal", {}};
  for (double x : xs) {
    rwlab::CheckRow row;
    row.params = "x=" + io::format_double(x) + ";K_max=" + std::to_string(table.K_max);
    row.lhs = table(x);
    row.rhs = rwlab::harmonic_rhs(table, law, x);
    row.ratio = row.lhs / row.rhs;
    row.error_bound = std::abs(table(x) - coarse(x)) + table.tail_bound * table(x);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extremal process lab for branching random walks with aggregated steps"};
  app.require_subcommand(1);

  std::string config, out_dir, params_path, in_dir;
  std::uint64_t seed = 1;
  int threads = 0;

  auto* cal = app.add_subcommand("calibrate", "Solve theta* and the centering for a model spec");
  double c_n_override = NAN, d_n_override = NAN;
  cal->add_option("--config", config, "ModelSpec JSON")->required();
  cal->add_option("--out", out_dir, "Directory for params.json");
  cal->add_option("--c-n", c_n_override, "Override c_n");
  cal->add_option("--d-n", d_n_override, "Override d_n");

  auto* sim = app.add_subcommand("simulate", "Simulate replicates and record the extremal window");
  std::uint64_t replicates = 100;
  double window = NAN;
  std::string prune = "on";
  sim->add_option("--config", config, "ModelSpec JSON")->required();
  sim->add_option("--params", params_path, "CalibratedParams JSON (recomputed when absent)");
  sim->add_option("--replicates", replicates, "Number of replicates")->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--window", window, "Recording window a_win relative to m_n");
  sim->add_option("--prune", prune, "Pruning: on | off")->check(CLI::IsMember({"on", "off"}));
  sim->add_option("--threads", threads, "Worker threads (fallback GREM_THREADS)");
  sim->add_option("--out", out_dir, "Output directory")->required();

  auto* m2o = app.add_subcommand("many2one", "Expected path counts by the tilted spine, with exact values when available");
  std::string g_text = "const";
  int levels = 0;
  std::uint64_t samples = 100000;
  double theta_fixed = NAN;
  m2o->add_option("--config", config, "ModelSpec JSON")->required();
  m2o->add_option("--g", g_text, "Functional: const | indicator:a | exp:theta");
  m2o->add_option("--levels", levels, "Number of levels (default k_n)");
  m2o->add_option("--samples", samples, "Monte Carlo samples")->check(CLI::PositiveNumber);
  m2o->add_option("--theta", theta_fixed, "Tilt parameter (default theta*)");
  m2o->add_option("--seed", seed, "Seed");
  m2o->add_option("--out", out_dir, "Output directory (stdout when absent)");

  auto* rw = app.add_subcommand("rwlab", "Grid-convolution checks for walks under barriers");
  std::string check;
  std::vector<int> k_grid;
  std::vector<double> x_grid;
  int b = 16, k_n = 1024;
  double y = 0, a = 1, alpha = NAN, h = 0, lo = -1, hi = 0, x_max = 50, eps_tail = 0.01;
  std::string barrier = "F_bar", law_name = "standard_gaussian";
  rw->add_option("--check", check, "Check to run")
      ->required()
      ->check(CLI::IsMember({"ballot", "envelope", "stone", "stone-barrier", "bridge", "excursion", "renewal",
                             "renewal-ratio"}));
  rw->add_option("--k-grid", k_grid, "Horizons");
  rw->add_option("--x-grid", x_grid, "Start offsets / renewal arguments");
  rw->add_option("--k-n", k_n, "Levels for the stone checks");
  rw->add_option("--b", b, "Level length b_n");
  rw->add_option("--y", y, "Ballot level y");
  rw->add_option("--a", a, "Bridge barrier coefficient");
  rw->add_option("--alpha", alpha, "Excursion coefficient (default 3/(2 theta*))");
  rw->add_option("--grid-step", h, "Grid step (default sqrt(b)/64)");
  rw->add_option("--lo", lo, "Terminal interval lower end");
  rw->add_option("--hi", hi, "Terminal interval upper end");
  rw->add_option("--x-max", x_max, "Renewal table range");
  rw->add_option("--eps-tail", eps_tail, "Renewal tail tolerance");
  rw->add_option("--barrier", barrier, "Stone barrier: F_bar | F_tilde");
  rw->add_option("--law", law_name, "Displacement preset for the stone checks");
  rw->add_option("--out", out_dir, "Output directory (stdout when absent)");

  auto* an = app.add_subcommand("analyze", "Statistics of a simulated batch");
  an->add_option("--config", config, "ModelSpec JSON")->required();
  an->add_option("--in", in_dir, "Directory with points.csv and replicates.csv")->required();
  an->add_option("--window", window, "Recording window used by simulate (default -6/theta*)");
  an->add_option("--seed", seed, "Seed for the prelimit samples");
  an->add_option("--out", out_dir, "Output directory")->required();

  auto* pipe = app.add_subcommand("pipeline", "calibrate, simulate and analyze over an n-grid");
  std::string pipe_out;
  std::uint64_t pipe_seed = 0;
  pipe->add_option("--config", config, "ExperimentConfig JSON")->required();
  pipe->add_option("--seed", pipe_seed, "Override the master seed");
  pipe->add_option("--threads", threads, "Worker threads (fallback GREM_THREADS)");
  pipe->add_option("--out", pipe_out, "Override the output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*cal) {
      const ModelSpec spec = load_spec(config);
      CalibrationOverrides ov;
      if (!std::isnan(c_n_override)) ov.c_n = c_n_override;
      if (!std::isnan(d_n_override)) ov.d_n = d_n_override;
      const CalibratedParams p = calibrate(spec, ov);
      print_params(p);
      if (!out_dir.empty()) io::write_json(fs::path(out_dir) / "params.json", io::to_json(p));
    } else if (*sim) {
      const ModelSpec spec = load_spec(config);
      const CalibratedParams p =
          params_path.empty() ? calibrate(spec) : io::params_from_json(io::read_json(params_path));
      PruneConfig pc;
      pc.enabled = prune == "on";
      const SimulationSetup setup =
          make_setup(spec, p, pc, std::isnan(window) ? std::nullopt : std::optional<double>(window));
      const auto batch = run_batch(setup, seed, replicates, resolve_threads(threads));
      const fs::path out = out_dir;
      io::write_text(out / "points.csv", io::points_csv(batch));
      io::write_text(out / "replicates.csv", io::replicates_csv(batch));
      io::json m;
      m["format"] = io::kManifestFormat;
      m["spec_hash"] = io::sha256_hex(io::to_json(spec).dump());
      m["seed"] = seed;
      m["code_version"] = io::kCodeVersion;
      m["window"] = setup.window;
      m["replicates"] = replicates;
      m["prune"] = pc.enabled;
      m["files"] = {{{"path", "points.csv"}, {"format", io::kPointsFormat}},
                    {{"path", "replicates.csv"}, {"format", io::kReplicatesFormat}}};
      io::write_json(out / "manifest.json", m);
    } else if (*m2o) {
      const ModelSpec spec = load_spec(config);
      const int bn = spec.schedule.b_n();
      const double log_m = std::log(spec.offspring.mean());
      Tilt tilt;
      if (std::isnan(theta_fixed)) {
        tilt = Tilt::at(spec.displacement, solve_theta_star(log_m, spec.displacement), log_m, bn);
      } else {
        tilt = Tilt::at(spec.displacement, theta_fixed, log_m, bn);
      }
      const int lv = levels > 0 ? levels : spec.schedule.k_n();
      const PathFunctional g = parse_functional(g_text, lv * static_cast<double>(bn) * tilt.v);
      const Estimate e = expected_count_mc(spec.displacement, tilt, g, lv, samples, seed);
      std::string exact;
      if (spec.displacement.lattice()) {
        try {
          exact = io::format_double(brute_force_count(spec.offspring, spec.displacement, bn, g, lv));
        } catch (const Error& err) {
          if (err.kind() != ErrorKind::size) throw;
        }
      }
      emit(out_dir, "many2one.csv",
           "estimate,se,exact_if_available\n" + io::format_double(e.value) + ',' + io::format_double(e.se) + ',' +
               exact + '\n');
    } else if (*rw) {
      using namespace rwlab;
      CheckReport rep;
      if (check == "ballot" || check == "envelope") {
        if (k_grid.empty()) k_grid = {256, 512, 1024, 2048, 4096};
        const double hh = h > 0 ? h : 1.0 / 64;
        rep = check == "ballot" ? ballot_asymptotic_check(standard_gaussian_builder(), hh, y, k_grid)
                                : envelope_check(standard_gaussian_builder(), hh, y, k_grid);
      } else if (check == "stone" || check == "stone-barrier") {
        const DisplacementLaw law(displacement_preset_from(law_name));
        const LevelProblem pb = law.gaussian() ? LevelProblem::gaussian_binary(k_n, b)
                                               : LevelProblem::from(law, std::log(2.0), k_n, b);
        if (check == "stone") {
          if (x_grid.empty()) {
            const double r = std::sqrt(static_cast<double>(k_n)) / std::log(static_cast<double>(k_n));
            x_grid = {-r, 0, r};
          }
          rep = stone_llt_check(pb, IntervalFn{lo, hi, false}, x_grid, h);
        } else {
          if (x_grid.empty()) x_grid = {0};
          rep = stone_barrier_check(pb, IntervalFn{lo, hi, false}, x_grid, barrier_kind_from(barrier), h);
        }
      } else if (check == "bridge") {
        if (k_grid.empty()) k_grid = {64, 128, 256};
        rep = bridge_barrier_check(k_grid, b, a, x_grid.empty() ? 0.0 : x_grid.front(), h > 0 ? h : 1.0 / 32);
      } else if (check == "excursion") {
        if (k_grid.empty()) k_grid = {64, 128, 256};
        const double al = std::isnan(alpha) ? 1.5 / std::sqrt(2 * std::log(2.0)) : alpha;
        rep = excursion_check(k_grid, b, al, x_grid.empty() ? 0.0 : x_grid.front(), lo, hi, h);
      } else if (check == "renewal") {
        RenewalOptions ro;
        if (h > 0) ro.h = h;
        ro.x_max = x_max;
        ro.eps_tail = eps_tail;
        if (x_grid.empty()) x_grid = {0, 1, 5, 20, 40};
        rep = renewal_report(ro, x_grid);
      } else {
        RenewalOptions ro;
        if (h > 0) ro.h = h;
        ro.x_max = x_max;
        ro.eps_tail = eps_tail;
        if (k_grid.empty()) k_grid = {16, 64, 256, 1024, 4096};
        rep = renewal_ratio_check(k_grid, renewal_L(standard_gaussian_builder(), ro));
      }
      emit(out_dir, "rwlab_" + check + ".csv", io::check_csv(rep));
    } else if (*an) {
      const ModelSpec spec = load_spec(config);
      const CalibratedParams p = calibrate(spec);
      const double win = std::isnan(window) ? default_window(p) : window;
      const fs::path in = in_dir;
      const auto batch = io::read_batch(in / "points.csv", in / "replicates.csv", p.k_n);
      stats::AnalyzeOptions opts;
      opts.seed = seed;
      const auto rep = stats::analyze(batch, spec, p, win, opts);
      const fs::path out = out_dir;
      io::write_json(out / "report.json", io::to_json(rep));
      io::write_text(out / "laplace.csv", io::laplace_csv(rep));
      io::write_text(out / "counts.csv", io::counts_csv(rep));
      io::write_text(out / "overlap.csv", io::overlap_csv(rep));
      io::write_text(out / "barrier.csv", io::barrier_csv(rep));
      io::write_text(out / "ks.csv", io::ks_csv({rep}));
    } else if (*pipe) {
      io::ExperimentConfig cfg = io::config_from_json(io::read_json(config));
      if (pipe->count("--seed") > 0) cfg.seed = pipe_seed;
      if (!pipe_out.empty()) cfg.out_dir = pipe_out;
      if (threads > 0 || std::getenv("GREM_THREADS")) cfg.threads = resolve_threads(threads);
      const auto m = io::run_pipeline(cfg);
      std::printf("pipeline complete: %zu files in %s (config %s)\n", m.files.size(), cfg.out_dir.c_str(),
                  m.config_hash.substr(0, 12).c_str());
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
