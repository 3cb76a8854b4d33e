#include "grem/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "grem/error.hpp"

namespace grem::io {

namespace {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void require_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
  if (!j.is_object()) fail(ErrorKind::validation, what + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) fail(ErrorKind::validation, "unexpected field '" + key + "' in " + what);
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::string path_string(const NodeAddress& a) {
  std::string s;
  for (std::size_t i = 0; i < a.path.size(); ++i) {
    if (i) s.push_back('.');
    s += std::to_string(a.path[i]);
  }
  return s;
}

}  // namespace

json to_json(const ModelSpec& spec) {
  json off;
  off["preset"] = to_string(spec.offspring.preset());
  if (spec.offspring.preset() == OffspringPreset::deterministic) off["r"] = spec.offspring.fixed_count();
  if (spec.offspring.preset() == OffspringPreset::custom) off["weights"] = spec.offspring.weights();
  json disp;
  disp["preset"] = to_string(spec.displacement.preset());
  json sched;
  const Schedule& s = spec.schedule;
  sched["n"] = s.n;
  sched["rule"] = to_string(s.rule);
  switch (s.rule) {
    case KRule::power:
      sched["alpha"] = s.alpha;
      break;
    case KRule::constant:
    case KRule::explicit_k:
      sched["k"] = s.k;
      break;
    case KRule::given_b:
      sched["b"] = s.b;
      break;
  }
  json j;
  j["offspring"] = off;
  j["displacement"] = disp;
  j["schedule"] = sched;
  j["hypothesis"] = to_string(spec.hypothesis);
  return j;
}

ModelSpec spec_from_json(const json& j) {
  try {
    require_keys(j, {"offspring", "displacement", "schedule", "hypothesis", "format"}, "model spec");
    for (const char* k : {"offspring", "displacement", "schedule", "hypothesis"})
      if (!j.contains(k)) fail(ErrorKind::validation, std::string("model spec is missing '") + k + "'");
    ModelSpec spec;
    const json& off = j.at("offspring");
    require_keys(off, {"preset", "r", "weights"}, "offspring");
    const std::string op = off.at("preset").get<std::string>();
    if (op == "binary") {
      spec.offspring = OffspringLaw::binary();
    } else if (op == "deterministic") {
      spec.offspring = OffspringLaw::deterministic(off.at("r").get<int>());
    } else if (op == "custom") {
      spec.offspring = OffspringLaw::custom(off.at("weights").get<std::vector<double>>());
    } else {
      fail(ErrorKind::validation, "unknown offspring preset '" + op + "'");
    }
    const json& disp = j.at("displacement");
    require_keys(disp, {"preset"}, "displacement");
    spec.displacement = DisplacementLaw(displacement_preset_from(disp.at("preset").get<std::string>()));
    const json& sched = j.at("schedule");
    require_keys(sched, {"n", "rule", "alpha", "k", "b"}, "schedule");
    spec.schedule.n = sched.at("n").get<int>();
    spec.schedule.rule = k_rule_from(get_or<std::string>(sched, "rule", "power"));
    spec.schedule.alpha = get_or<double>(sched, "alpha", 0.5);
    spec.schedule.k = get_or<int>(sched, "k", 1);
    spec.schedule.b = get_or<int>(sched, "b", 1);
    spec.hypothesis = hypothesis_from(j.at("hypothesis").get<std::string>());
    return spec;
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed model spec: ") + e.what());
  }
}

json to_json(const CalibratedParams& p) {
  json j;
  j["format"] = kParamsFormat;
  j["theta_star"] = p.theta_star;
  j["v"] = p.v;
  j["sigma2"] = p.sigma2;
  j["m_n"] = p.m_n;
  j["a_n"] = p.a_n;
  j["c_n"] = p.c_n;
  j["d_n"] = p.d_n;
  j["beta_c"] = p.beta_c;
  j["log_m"] = p.log_m;
  j["n"] = p.n;
  j["k_n"] = p.k_n;
  j["b_n"] = p.b_n;
  j["schedule_warning"] = p.schedule_warning;
  return j;
}

CalibratedParams params_from_json(const json& j) {
  try {
    CalibratedParams p;
    p.theta_star = j.at("theta_star").get<double>();
    p.v = j.at("v").get<double>();
    p.sigma2 = j.at("sigma2").get<double>();
    p.m_n = j.at("m_n").get<double>();
    p.a_n = j.at("a_n").get<double>();
    p.c_n = j.at("c_n").get<double>();
    p.d_n = j.at("d_n").get<double>();
    p.beta_c = get_or<double>(j, "beta_c", p.theta_star);
    p.log_m = j.at("log_m").get<double>();
    p.n = j.at("n").get<int>();
    p.k_n = j.at("k_n").get<int>();
    p.b_n = j.at("b_n").get<int>();
    p.schedule_warning = get_or<bool>(j, "schedule_warning", false);
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed params: ") + e.what());
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::validation, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::validation, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorKind::validation, "write failed for " + path.string());
  }
  fs::rename(tmp, path);
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorKind::validation, "cannot parse number '" + s + "'");
  return v;
}

std::string points_csv(std::span<const RunResult> batch) {
  std::string out = "replicate_id,point,W,max_flag,path\n";
  for (const auto& r : batch) {
    bool flagged = false;
    for (const auto& p : r.points) {
      const bool is_max = !flagged && p.value == r.max_recentred;
      flagged = flagged || is_max;
      out += std::to_string(r.replicate_id) + ',' + format_double(p.value) + ',' + format_double(r.W) + ',' +
             (is_max ? "1" : "0") + ',' + path_string(p.address) + '\n';
    }
  }
  return out;
}

std::string replicates_csv(std::span<const RunResult> batch) {
  std::string out = "replicate_id,seed,leaf_count,W,max_recentred,violated_R,pruned_mass_bound,nodes_expanded\n";
  for (const auto& r : batch) {
    out += std::to_string(r.replicate_id) + ',' + std::to_string(r.seed) + ',' + std::to_string(r.leaf_count) + ',' +
           format_double(r.W) + ',' + format_double(r.max_recentred) + ',' + (r.violated_R ? "1" : "0") + ',' +
           format_double(r.pruned_mass_bound) + ',' + std::to_string(r.nodes_expanded) + '\n';
  }
  return out;
}

std::vector<RunResult> read_batch(const fs::path& points_path, const fs::path& replicates_path, int k_n) {
  std::vector<RunResult> batch;
  std::map<std::uint64_t, std::size_t> index;
  {
    std::ifstream in(replicates_path);
    if (!in) fail(ErrorKind::validation, "cannot open " + replicates_path.string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 8) fail(ErrorKind::validation, "bad replicates row: " + line);
      RunResult r;
      r.replicate_id = std::stoull(f[0]);
      r.seed = std::stoull(f[1]);
      r.leaf_count = std::stoull(f[2]);
      r.W = parse_double(f[3]);
      r.max_recentred = parse_double(f[4]);
      r.violated_R = f[5] == "1";
      r.pruned_mass_bound = parse_double(f[6]);
      r.nodes_expanded = std::stoull(f[7]);
      index[r.replicate_id] = batch.size();
      batch.push_back(std::move(r));
    }
  }
  {
    std::ifstream in(points_path);
    if (!in) fail(ErrorKind::validation, "cannot open " + points_path.string());
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 5) fail(ErrorKind::validation, "bad points row: " + line);
      const auto it = index.find(std::stoull(f[0]));
      if (it == index.end()) fail(ErrorKind::validation, "point for unknown replicate " + f[0]);
      Point p;
      p.value = parse_double(f[1]);
      if (!f[4].empty())
        for (const auto& s : split(f[4], '.')) p.address.path.push_back(static_cast<std::uint32_t>(std::stoul(s)));
      batch[it->second].points.push_back(std::move(p));
    }
  }
  for (auto& r : batch) r.overlap_histogram = overlap_histogram(r.points, k_n);
  return batch;
}

std::string laplace_csv(const stats::StatsReport& rep) {
  std::string out = "phi_id,empirical,se,limit,prelimit\n";
  for (const auto& row : rep.laplace)
    out += row.phi_id + ',' + format_double(row.empirical.value) + ',' + format_double(row.empirical.se) + ',' +
           format_double(row.limit) + ',' + format_double(row.prelimit) + '\n';
  return out;
}

std::string counts_csv(const stats::StatsReport& rep) {
  std::string out = "a,mean,se,limit\n";
  for (const auto& row : rep.counts)
    out += format_double(row.a) + ',' + format_double(row.mean) + ',' + format_double(row.se) + ',' +
           format_double(row.limit) + '\n';
  return out;
}

std::string overlap_csv(const stats::StatsReport& rep) {
  std::string out = "n,pairs_mean,pairs_se,fraction,fraction_se\n";
  if (rep.replicates > 0)
    out += std::to_string(rep.n) + ',' + format_double(rep.overlap.pairs.value) + ',' +
           format_double(rep.overlap.pairs.se) + ',' + format_double(rep.overlap.fraction) + ',' +
           format_double(rep.overlap.fraction_se) + '\n';
  return out;
}

std::string barrier_csv(const stats::StatsReport& rep) {
  std::string out = "n,violation_rate,se\n";
  if (rep.replicates > 0)
    out += std::to_string(rep.n) + ',' + format_double(rep.violation.value) + ',' + format_double(rep.violation.se) +
           '\n';
  return out;
}

std::string ks_csv(const std::vector<stats::StatsReport>& reports) {
  std::string out = "n,ks_stat,critical_1pct\n";
  for (const auto& r : reports)
    if (r.replicates > 0)
      out += std::to_string(r.n) + ',' + format_double(r.ks.statistic) + ',' + format_double(r.ks.critical_1pct) + '\n';
  return out;
}

json to_json(const stats::StatsReport& rep) {
  json j;
  j["format"] = kReportFormat;
  j["n"] = rep.n;
  j["replicates"] = rep.replicates;
  j["laplace"] = json::array();
  for (const auto& row : rep.laplace)
    j["laplace"].push_back({{"phi_id", row.phi_id},
                            {"empirical", row.empirical.value},
                            {"se", row.empirical.se},
                            {"limit", row.limit},
                            {"prelimit", row.prelimit}});
  j["counts"] = json::array();
  for (const auto& row : rep.counts)
    j["counts"].push_back({{"a", row.a}, {"mean", row.mean}, {"se", row.se}, {"limit", row.limit}});
  j["ks"] = {{"statistic", rep.ks.statistic}, {"critical_1pct", rep.ks.critical_1pct}, {"samples", rep.ks.samples}};
  j["overlap"] = {{"pairs_mean", rep.overlap.pairs.value},
                  {"pairs_se", rep.overlap.pairs.se},
                  {"fraction", rep.overlap.fraction},
                  {"fraction_se", rep.overlap.fraction_se}};
  j["violation_rate"] = {{"value", rep.violation.value}, {"se", rep.violation.se}};
  j["factorial_gap"] = {{"value", rep.factorial.value}, {"se", rep.factorial.se}};
  return j;
}

std::string check_csv(const rwlab::CheckReport& rep) {
  // Parameter columns come from the "key=value;..." string of the first row.
  std::vector<std::string> keys;
  if (!rep.rows.empty())
    for (const auto& kv : split(rep.rows.front().params, ';')) keys.push_back(kv.substr(0, kv.find('=')));
  std::string out = "check";
  for (const auto& k : keys) out += ',' + k;
  out += ",lhs,rhs,ratio,error_bound\n";
  for (const auto& row : rep.rows) {
    out += rep.check;
    for (const auto& kv : split(row.params, ';')) out += ',' + kv.substr(kv.find('=') + 1);
    out += ',' + format_double(row.lhs) + ',' + format_double(row.rhs) + ',' + format_double(row.ratio) + ',' +
           format_double(row.error_bound) + '\n';
  }
  return out;
}

ExperimentConfig config_from_json(const json& j) {
  try {
    require_keys(j,
                 {"format", "spec", "n_grid", "replicates", "seed", "window", "prune", "out_dir", "threads", "analyze"},
                 "experiment config");
    ExperimentConfig c;
    if (!j.contains("spec")) fail(ErrorKind::validation, "experiment config is missing 'spec'");
    c.spec = spec_from_json(j.at("spec"));
    c.n_grid = get_or<std::vector<int>>(j, "n_grid", {c.spec.schedule.n});
    c.replicates = get_or<std::uint64_t>(j, "replicates", c.replicates);
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("window") && !j.at("window").is_null()) c.window = j.at("window").get<double>();
    if (j.contains("prune")) {
      const json& p = j.at("prune");
      require_keys(p, {"enabled", "reference", "margin", "reach", "reach_epsilon"}, "prune");
      c.prune.enabled = get_or<bool>(p, "enabled", c.prune.enabled);
      c.prune.reference = barrier_kind_from(get_or<std::string>(p, "reference", to_string(c.prune.reference)));
      if (p.contains("margin") && !p.at("margin").is_null()) c.prune.margin = p.at("margin").get<double>();
      c.prune.reach = get_or<bool>(p, "reach", c.prune.reach);
      c.prune.reach_epsilon = get_or<double>(p, "reach_epsilon", c.prune.reach_epsilon);
    }
    c.out_dir = get_or<std::string>(j, "out_dir", c.out_dir);
    c.threads = get_or<unsigned>(j, "threads", c.threads);
    if (j.contains("analyze")) {
      const json& a = j.at("analyze");
      require_keys(a, {"phis", "a_grid", "overlap_a", "prelimit_samples"}, "analyze");
      c.analyze.phis = get_or<std::vector<std::string>>(a, "phis", c.analyze.phis);
      c.analyze.a_grid = get_or<std::vector<double>>(a, "a_grid", c.analyze.a_grid);
      c.analyze.overlap_a = get_or<double>(a, "overlap_a", c.analyze.overlap_a);
      c.analyze.prelimit_samples = get_or<std::uint64_t>(a, "prelimit_samples", c.analyze.prelimit_samples);
    }
    c.analyze.seed = c.seed;
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::validation, std::string("malformed experiment config: ") + e.what());
  }
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["format"] = kConfigFormat;
  j["spec"] = to_json(c.spec);
  j["n_grid"] = c.n_grid;
  j["replicates"] = c.replicates;
  j["seed"] = c.seed;
  j["window"] = c.window ? json(*c.window) : json(nullptr);
  j["prune"] = {{"enabled", c.prune.enabled},
                {"reference", to_string(c.prune.reference)},
                {"margin", c.prune.margin ? json(*c.prune.margin) : json(nullptr)},
                {"reach", c.prune.reach},
                {"reach_epsilon", c.prune.reach_epsilon}};
  j["out_dir"] = c.out_dir;
  j["threads"] = c.threads;
  j["analyze"] = {{"phis", c.analyze.phis},
                  {"a_grid", c.analyze.a_grid},
                  {"overlap_a", c.analyze.overlap_a},
                  {"prelimit_samples", c.analyze.prelimit_samples}};
  return j;
}

void validate_config(const ExperimentConfig& c) {
  if (c.n_grid.empty()) fail(ErrorKind::validation, "n-grid is empty");
  for (std::size_t i = 1; i < c.n_grid.size(); ++i)
    if (c.n_grid[i] <= c.n_grid[i - 1]) fail(ErrorKind::validation, "n-grid must be strictly increasing");
  if (c.replicates < 1) fail(ErrorKind::validation, "replicates must be >= 1");
  if (c.threads < 1) fail(ErrorKind::validation, "threads must be >= 1");
  for (int n : c.n_grid) {
    ModelSpec s = c.spec;
    s.schedule = s.schedule.with_n(n);
    require_valid(s);
  }
  for (const auto& phi : c.analyze.phis) (void)stats::TestFunction::parse(phi);
}

json to_json(const RunManifest& m) {
  json j;
  j["format"] = kManifestFormat;
  j["config_hash"] = m.config_hash;
  j["code_version"] = m.code_version;
  j["seed"] = m.seed;
  j["wall_clock_seconds"] = m.wall_clock_seconds;
  j["complete"] = m.complete;
  if (!m.complete) {
    j["failed_stage"] = m.failed_stage;
    j["error"] = m.error;
  }
  j["files"] = json::array();
  for (const auto& f : m.files) j["files"].push_back({{"path", f.path}, {"format", f.format}, {"stage", f.stage}});
  return j;
}

}  // namespace grem::io
