#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "grem/error.hpp"
#include "grem/io.hpp"

using namespace grem;
using namespace grem::io;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grem_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GREM_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.spec.offspring = OffspringLaw::deterministic(2);
  c.spec.schedule.n = 9;
  c.n_grid = {9, 12};
  c.replicates = 30;
  c.seed = 5;
  c.out_dir = out.string();
  c.analyze.prelimit_samples = 100;
  return c;
}

}  // namespace

TEST_CASE("doubles survive text round trips") {
  for (double x : {0.0, -0.0, 1.0 / 3, 1e-300, -2.5e17, 6.02214076e23}) CHECK(parse_double(format_double(x)) == x);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
}

TEST_CASE("sha256 of a known vector") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("model spec round trip and strict keys") {
  ModelSpec s;
  s.offspring = OffspringLaw::custom({0.0, 0.25, 0.75});
  s.displacement = DisplacementLaw(DisplacementPreset::shifted_exponential);
  s.schedule.rule = KRule::given_b;
  s.schedule.b = 8;
  s.schedule.n = 64;
  s.hypothesis = Hypothesis::H2;
  const json j = to_json(s);
  const ModelSpec back = spec_from_json(j);
  CHECK(to_json(back) == j);
  CHECK(back.offspring.weights() == s.offspring.weights());
  CHECK(back.schedule.b_n() == 8);

  json extra = j;
  extra["colour"] = "blue";
  CHECK_THROWS_AS(spec_from_json(extra), Error);
  json fmt = j;
  fmt["format"] = "anything";
  CHECK_NOTHROW(spec_from_json(fmt));
}

TEST_CASE("calibrated params round trip") {
  ModelSpec s;
  s.schedule.n = 100;
  const auto p = calibrate(s);
  const auto q = params_from_json(json::parse(to_json(p).dump()));
  CHECK(q.theta_star == p.theta_star);
  CHECK(q.m_n == p.m_n);
  CHECK(q.k_n == p.k_n);
  CHECK(q.c_n == p.c_n);
}

TEST_CASE("empty batch writes header-only tables") {
  const std::vector<RunResult> none;
  CHECK(points_csv(none) == "replicate_id,point,W,max_flag,path\n");
  CHECK(replicates_csv(none) ==
        "replicate_id,seed,leaf_count,W,max_recentred,violated_R,pruned_mass_bound,nodes_expanded\n");
  ModelSpec spec;
  spec.schedule.n = 16;
  const auto p = calibrate(spec);
  const auto rep = stats::analyze(none, spec, p, default_window(p));
  CHECK(laplace_csv(rep) == "phi_id,empirical,se,limit,prelimit\n");
  CHECK(counts_csv(rep) == "a,mean,se,limit\n");
  CHECK(overlap_csv(rep) == "n,pairs_mean,pairs_se,fraction,fraction_se\n");
  CHECK(barrier_csv(rep) == "n,violation_rate,se\n");
  CHECK(ks_csv({rep}) == "n,ks_stat,critical_1pct\n");
}

TEST_CASE("batch round trip through CSV") {
  ModelSpec spec;
  spec.offspring = OffspringLaw::custom({0.0, 0.5, 0.0, 0.5});
  spec.schedule.n = 16;
  const auto batch = run_batch(make_setup(spec, calibrate(spec)), 8, 20);
  const auto dir = scratch("batch");
  write_text(dir / "points.csv", points_csv(batch));
  write_text(dir / "replicates.csv", replicates_csv(batch));
  const auto back = read_batch(dir / "points.csv", dir / "replicates.csv", 4);
  CHECK(back == batch);
}

TEST_CASE("check reports carry parameter columns") {
  rwlab::CheckReport rep;
  rep.check = "ballot";
  rep.rows.push_back({"k=4;y=0", 0.25, 0.5, 0.5, 1e-3});
  const std::string csv = check_csv(rep);
  CHECK(csv.rfind("check,k,y,lhs,rhs,ratio,error_bound\n", 0) == 0);
  CHECK(csv.find("ballot,4,0,0.25,0.5,0.5,0.001") != std::string::npos);
}

TEST_CASE("experiment config validation") {
  auto c = small_config(scratch("cfgval"));
  CHECK_NOTHROW(validate_config(c));
  const auto back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  c.n_grid = {12, 9};
  CHECK_THROWS_AS(validate_config(c), Error);
  c.n_grid = {9};
  c.replicates = 0;
  CHECK_THROWS_AS(validate_config(c), Error);
  c.replicates = 1;
  c.spec.offspring = OffspringLaw::custom({0.5, 0.5});
  CHECK_THROWS_AS(validate_config(c), Error);
}

TEST_CASE("pipeline writes every file and reruns byte-identically") {
  const auto a = scratch("pipe_a");
  const auto b = scratch("pipe_b");
  auto ca = small_config(a);
  auto cb = small_config(b);
  cb.threads = 3;
  const auto ma = run_pipeline(ca);
  const auto mb = run_pipeline(cb);
  CHECK(ma.complete);
  CHECK(ma.files.size() == 1 + 2 * 8 + 1);
  CHECK(fs::exists(a / "manifest.json"));
  for (const auto& f : ma.files) {
    if (f.path == "config.json") continue;
    CHECK_MESSAGE(slurp(a / f.path) == slurp(b / f.path), f.path);
  }
  const json m = read_json(a / "manifest.json");
  CHECK(m.at("complete").get<bool>());
  CHECK(m.at("config_hash").get<std::string>().size() == 64);
}

TEST_CASE("command-line exit codes") {
  const auto dir = scratch("cli");
  {
    std::ofstream bad(dir / "bad.json");
    bad << R"({"offspring":{"preset":"custom","weights":[0.5,0.5]},"displacement":{"preset":"standard_gaussian"},)"
        << R"("schedule":{"n":8},"hypothesis":"H1"})";
  }
  {
    std::ofstream good(dir / "good.json");
    good << R"({"offspring":{"preset":"binary"},"displacement":{"preset":"standard_gaussian"},)"
         << R"("schedule":{"n":8},"hypothesis":"H1"})";
  }
  CHECK(run_cli("calibrate --config " + (dir / "good.json").string()) == 0);
  CHECK(run_cli("calibrate --config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("simulate --config " + (dir / "bad.json").string() + " --replicates 2 --out " +
                (dir / "o").string()) == 2);
  CHECK(run_cli("no-such-command") == 2);
}
