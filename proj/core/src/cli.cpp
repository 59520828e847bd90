#include "rduniband/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "rduniband/bandwidth.hpp"
#include "rduniband/bootstrap.hpp"
#include "rduniband/designs.hpp"
#include "rduniband/dgp_sim.hpp"
#include "rduniband/rng.hpp"

namespace rdu {

namespace {

using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

double parse_cell(const std::string& cell, std::size_t line_no) {
  try {
    std::size_t pos = 0;
    double v = std::stod(cell, &pos);
    if (pos != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw ParseError(line_no, "not numeric: '" + cell + "'");
  }
}

}  // namespace

ObservationSet ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open input file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw EmptyFile("empty input file: " + path);
  std::size_t line_no = 1;

  auto header = split_cells(line);
  int ix = -1, iy = -1, id = -1, ig = -1;
  for (std::size_t j = 0; j < header.size(); ++j) {
    std::string h = lower(header[j]);
    if (h == "x") ix = static_cast<int>(j);
    else if (h == "y") iy = static_cast<int>(j);
    else if (h == "d") id = static_cast<int>(j);
    else if (h == "g") ig = static_cast<int>(j);
  }
  if (ix < 0) throw MissingColumn("x");
  if (iy < 0) throw MissingColumn("y");
  int needed = std::max({ix, iy, id, ig});

  ObservationSet out;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_cells(line);
    if (static_cast<int>(cells.size()) <= needed)
      throw ParseError(line_no, "expected at least " +
                                    std::to_string(needed + 1) + " cells");
    out.x.push_back(parse_cell(cells[ix], line_no));
    out.y.push_back(parse_cell(cells[iy], line_no));
    if (id >= 0) out.d.push_back(parse_cell(cells[id], line_no));
    if (ig >= 0) {
      double g = parse_cell(cells[ig], line_no);
      double r = std::round(g);
      if (std::abs(g - r) > 1e-9)
        throw ParseError(line_no, "group label must be an integer");
      out.g.push_back(static_cast<int>(r));
    }
  }
  if (out.x.empty()) throw EmptyFile("no data rows in " + path);
  return out;
}

namespace {

// ---------------------------------------------------------------------------
// Option resolution: defaults < config file < flags.

struct CommonOpts {
  std::string design = "smrd";
  std::string input, output, config_path, band_csv;
  double alpha = 0.05;
  int boot_B = 2000;
  std::uint64_t seed = 1;
  std::string bandwidth_rule = "rot";
  double h1 = 0, h2 = 0;  // fixed-rule bandwidths
  bool per_theta = false;
  int n_theta = 31, n_y = 2000;
  double a = 0.2;
  std::string kernel = "epanechnikov";
  int p = 0;
  double slope_jump = 0;  // 0 = unset
  double a_n = 0, b_n = 0, c_n = 0;
  int threads = 0;
};

using OptRefs = std::map<std::string, CLI::Option*>;

void add_common(CLI::App* cmd, CommonOpts& o, OptRefs& refs, bool with_input) {
  refs["design"] = cmd->add_option("--design", o.design,
                                   "design family (smrd fmrd smrk fmrk scrd "
                                   "sqrd fqrd sqrk fqrk gfmrd)");
  if (with_input)
    refs["input"] = cmd->add_option("--input", o.input,
                                    "input CSV with header x,y[,d,g]");
  refs["output"] =
      cmd->add_option("--output", o.output, "output JSON path (default stdout)");
  refs["config"] = cmd->add_option("--config", o.config_path,
                                   "flat key=value config file; flags win");
  refs["alpha"] = cmd->add_option("--alpha", o.alpha, "significance level");
  refs["boot-B"] = cmd->add_option("--boot-B", o.boot_B, "bootstrap draws");
  refs["seed"] = cmd->add_option("--seed", o.seed, "master seed");
  refs["bandwidth-rule"] =
      cmd->add_option("--bandwidth-rule", o.bandwidth_rule,
                      "rot | mse | fixed:<h1>[,<h2>]");
  refs["per-theta"] = cmd->add_flag("--per-theta", o.per_theta,
                                    "per-grid-point bandwidth selection");
  refs["n-theta"] =
      cmd->add_option("--n-theta", o.n_theta, "quantile grid size");
  refs["n-y"] = cmd->add_option("--n-y", o.n_y, "outcome grid size");
  refs["a"] = cmd->add_option("--a", o.a, "grid trim: theta in [a, 1-a]");
  refs["kernel"] = cmd->add_option("--kernel", o.kernel, "kernel name");
  refs["p"] = cmd->add_option("--p", o.p, "polynomial order (0 = v + 2)");
  refs["slope-jump"] = cmd->add_option("--slope-jump", o.slope_jump,
                                       "known assignment slope jump (kinks)");
  refs["threads"] = cmd->add_option("--threads", o.threads,
                                    "worker threads (0 = auto)");
  refs["band-csv"] = cmd->add_option("--band-csv", o.band_csv,
                                     "write theta,tau_hat,lower,upper CSV");
}

bool flag_given(const OptRefs& refs, const std::string& name) {
  auto it = refs.find(name);
  return it != refs.end() && it->second != nullptr && it->second->count() > 0;
}

void apply_config_file(CommonOpts& o, const OptRefs& refs) {
  if (o.config_path.empty()) return;
  std::ifstream in(o.config_path);
  if (!in) throw std::runtime_error("cannot open config file: " + o.config_path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error(o.config_path + ":" + std::to_string(line_no) +
                               ": expected key=value");
    std::string key = trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    auto as_int = [&] { return std::stoi(val); };
    auto as_double = [&] { return std::stod(val); };
    auto as_bool = [&] { return val == "1" || lower(val) == "true"; };
    if (key == "density.a_n") o.a_n = as_double();
    else if (key == "density.b_n") o.b_n = as_double();
    else if (key == "density.c_n") o.c_n = as_double();
    else if (key == "grid.n_theta") { if (!flag_given(refs, "n-theta")) o.n_theta = as_int(); }
    else if (key == "grid.n_y") { if (!flag_given(refs, "n-y")) o.n_y = as_int(); }
    else if (key == "grid.a") { if (!flag_given(refs, "a")) o.a = as_double(); }
    else if (key == "boot.B") { if (!flag_given(refs, "boot-B")) o.boot_B = as_int(); }
    else if (key == "boot.alpha") { if (!flag_given(refs, "alpha")) o.alpha = as_double(); }
    else if (key == "boot.seed") { if (!flag_given(refs, "seed")) o.seed = std::stoull(val); }
    else if (key == "bandwidth.rule") { if (!flag_given(refs, "bandwidth-rule")) o.bandwidth_rule = val; }
    else if (key == "bandwidth.h1") o.h1 = as_double();
    else if (key == "bandwidth.h2") o.h2 = as_double();
    else if (key == "bandwidth.per_theta") { if (!flag_given(refs, "per-theta")) o.per_theta = as_bool(); }
    else throw std::runtime_error(o.config_path + ":" + std::to_string(line_no) +
                                  ": unknown config key: " + key);
  }
}

DesignSpec make_design(const CommonOpts& o) {
  DesignSpec spec;
  spec.family = family_from_string(o.design);
  spec.kernel = kernel_from_string(o.kernel);
  spec.p = o.p;
  spec.n_theta = o.n_theta;
  spec.n_y = o.n_y;
  spec.grid_trim = o.a;
  if (o.slope_jump != 0) spec.known_slope_jump = o.slope_jump;
  return spec;
}

BandwidthConfig make_bandwidth_config(const CommonOpts& o) {
  BandwidthConfig cfg;
  std::string rule = o.bandwidth_rule;
  cfg.fixed_h1 = o.h1;
  cfg.fixed_h2 = o.h2;
  if (rule.rfind("fixed:", 0) == 0) {
    cfg.rule = BandwidthRule::fixed;
    std::string rest = rule.substr(6);
    auto comma = rest.find(',');
    cfg.fixed_h1 = std::stod(rest.substr(0, comma));
    if (comma != std::string::npos) cfg.fixed_h2 = std::stod(rest.substr(comma + 1));
  } else {
    cfg.rule = bandwidth_rule_from_string(rule);
  }
  cfg.per_theta = o.per_theta;
  return cfg;
}

void check_columns(const DesignSpec& spec, const ObservationSet& s) {
  if (family_needs_d(spec.family) && !s.has_d()) throw MissingColumn("d");
  if (family_needs_g(spec.family) && !s.has_g()) throw MissingColumn("g");
}

void check_alpha(double alpha) {
  if (!(alpha > 0 && alpha < 1))
    throw std::invalid_argument("alpha must lie in (0, 1)");
}

// ---------------------------------------------------------------------------
// JSON serialization (ordered keys so reruns are byte-identical).

json config_echo(const CommonOpts& o) {
  return json{{"design", o.design},
              {"input", o.input},
              {"kernel", o.kernel},
              {"p", o.p},
              {"alpha", o.alpha},
              {"boot_B", o.boot_B},
              {"seed", o.seed},
              {"bandwidth",
               {{"rule", o.bandwidth_rule},
                {"h1", o.h1},
                {"h2", o.h2},
                {"per_theta", o.per_theta}}},
              {"grid", {{"n_theta", o.n_theta}, {"n_y", o.n_y}, {"a", o.a}}},
              {"density", {{"a_n", o.a_n}, {"b_n", o.b_n}, {"c_n", o.c_n}}},
              {"slope_jump", o.slope_jump},
              {"threads", o.threads}};
}

json to_json(const BandwidthPlan& p) {
  return json{{"k", p.k},
              {"point", p.point},
              {"h_used", p.h_used},
              {"step1",
               {{"h0", p.step1.h0},
                {"c0", p.step1.c0},
                {"c0_prime", p.step1.c0_prime},
                {"f_x0", p.step1.f_x0},
                {"degenerate", p.step1.degenerate}}},
              {"pilots",
               {{"sigma2_plus", p.pilots.sigma2_plus},
                {"sigma2_minus", p.pilots.sigma2_minus},
                {"deriv_plus", p.pilots.deriv_plus},
                {"deriv_minus", p.pilots.deriv_minus}}},
              {"step3",
               {{"h_mse", p.step3.h_mse},
                {"h_rot", p.step3.h_rot},
                {"c_hat", p.step3.c_hat},
                {"c_prime_hat", p.step3.c_prime_hat},
                {"degenerate", p.step3.degenerate}}}};
}

json to_json(const SelectedBandwidths& sel, bool with_plans) {
  json j{{"h1", sel.bw.h1},
         {"h2", sel.bw.h2},
         {"h1_per_point", sel.bw.h1_per_point},
         {"h2_per_point", sel.bw.h2_per_point},
         {"a_n", sel.bw.a_n},
         {"b_n", sel.bw.b_n},
         {"c_n", sel.bw.c_n}};
  if (with_plans) {
    json plans = json::array();
    for (const auto& p : sel.plans) plans.push_back(to_json(p));
    j["plans"] = plans;
  }
  return j;
}

json to_json(const TestResult& t) {
  return json{{"stat", t.stat},
              {"critical", t.critical},
              {"p_value", t.p_value},
              {"reject", t.reject},
              {"B", t.B}};
}

json estimate_summary(const EstimateResult& est) {
  return json{{"family", to_string(est.family)},
              {"v", est.v},
              {"n", est.n},
              {"eval", est.eval},
              {"tau", est.tau},
              {"h1", est.h1},
              {"h2", est.h2},
              {"h_base", est.h_base},
              {"stat_scale", est.stat_scale},
              {"f_x0", est.f_x0},
              {"saturation_count", est.saturation_count}};
}

json to_json(const McReport& r) {
  return json{{"dgp", to_string(r.dgp)},
              {"design", to_string(r.family)},
              {"check", to_string(r.check)},
              {"n", r.n},
              {"R", r.R},
              {"B", r.B},
              {"level", r.level},
              {"rate", r.rate},
              {"se", r.se},
              {"successes", r.successes},
              {"failures", r.failures},
              {"failure_rate", r.failure_rate},
              {"flagged", r.flagged},
              {"mean_h1", r.mean_h1},
              {"mean_h2", r.mean_h2}};
}

void emit(const json& j, const std::string& output) {
  if (output.empty()) {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write output file: " + output);
  out << j.dump(2) << "\n";
}

void write_band_csv(const std::string& path, const std::vector<double>& eval,
                    const std::vector<double>& tau, const BandResult& band) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write band CSV: " + path);
  out << "theta,tau_hat,lower,upper\n";
  out.precision(17);
  for (std::size_t j = 0; j < eval.size(); ++j)
    out << eval[j] << "," << tau[j] << "," << band.lo[j] << ","
        << band.hi[j] << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand pipelines.

struct Fitted {
  ObservationSet data;
  DesignSpec spec;
  SelectedBandwidths sel;
  EstimateResult est;
  Eigen::MatrixXd draws;
};

Fitted fit_pipeline(const CommonOpts& o) {
  check_alpha(o.alpha);
  if (o.input.empty()) throw std::invalid_argument("--input is required");
  Fitted f;
  f.data = ingest_csv(o.input);
  f.spec = make_design(o);
  check_columns(f.spec, f.data);
  f.sel = select_bandwidths(f.data, f.spec, make_bandwidth_config(o));
  if (o.a_n > 0) f.sel.bw.a_n = o.a_n;
  if (o.b_n > 0) f.sel.bw.b_n = o.b_n;
  if (o.c_n > 0) f.sel.bw.c_n = o.c_n;
  f.est = estimate(f.data, f.spec, f.sel.bw);
  f.draws = run_bootstrap(f.est.scores, o.boot_B, o.seed, o.threads);
  return f;
}

json warnings_json(const Fitted& f) {
  json w = json::array();
  if (f.est.saturation_count > 0)
    w.push_back("quantile saturation at " +
                std::to_string(f.est.saturation_count) + " grid cells");
  for (const auto& p : f.sel.plans)
    if (p.step3.degenerate) {
      w.push_back("bandwidth bias constant vanished; range cap applied");
      break;
    }
  return w;
}

int cmd_estimate(const CommonOpts& o) {
  auto t0 = std::chrono::steady_clock::now();
  Fitted f = fit_pipeline(o);
  BandResult band = uniform_band(f.est.tau, f.draws, o.alpha, f.est.stat_scale);
  json tests{
      {"nullity",
       to_json(test_uniform_nullity(f.est.tau, f.draws, o.alpha,
                                    f.est.stat_scale))},
      {"homogeneity",
       to_json(test_homogeneity(f.est.tau, f.draws, o.alpha, f.est.stat_scale))},
      {"dominance",
       to_json(test_dominance(f.est.tau, f.draws, o.alpha, f.est.stat_scale))}};
  if (!o.band_csv.empty())
    write_band_csv(o.band_csv, f.est.eval, f.est.tau, band);
  json out{{"schema_version", "1.0"},
           {"command", "estimate"},
           {"config", config_echo(o)},
           {"bandwidth", to_json(f.sel, false)},
           {"estimate", estimate_summary(f.est)},
           {"band",
            {{"alpha", o.alpha},
             {"critical", band.critical},
             {"half_width", band.half_width},
             {"lower", band.lo},
             {"upper", band.hi}}},
           {"tests", tests},
           {"warnings", warnings_json(f)},
           {"timing",
            {{"seconds",
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count()}}}};
  emit(out, o.output);
  return 0;
}

int cmd_test(const CommonOpts& o, const std::string& kind) {
  auto t0 = std::chrono::steady_clock::now();
  Fitted f = fit_pipeline(o);
  TestResult t;
  if (kind == "nullity")
    t = test_uniform_nullity(f.est.tau, f.draws, o.alpha, f.est.stat_scale);
  else if (kind == "homogeneity")
    t = test_homogeneity(f.est.tau, f.draws, o.alpha, f.est.stat_scale);
  else if (kind == "dominance")
    t = test_dominance(f.est.tau, f.draws, o.alpha, f.est.stat_scale);
  else
    throw std::invalid_argument("unknown test kind: " + kind);
  json out{{"schema_version", "1.0"},
           {"command", "test"},
           {"kind", kind},
           {"config", config_echo(o)},
           {"bandwidth", to_json(f.sel, false)},
           {"estimate", estimate_summary(f.est)},
           {"test", to_json(t)},
           {"warnings", warnings_json(f)},
           {"timing",
            {{"seconds",
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count()}}}};
  emit(out, o.output);
  return 0;
}

int cmd_bandwidth(const CommonOpts& o) {
  auto t0 = std::chrono::steady_clock::now();
  if (o.input.empty()) throw std::invalid_argument("--input is required");
  ObservationSet data = ingest_csv(o.input);
  DesignSpec spec = make_design(o);
  check_columns(spec, data);
  SelectedBandwidths sel = select_bandwidths(data, spec, make_bandwidth_config(o));
  json out{{"schema_version", "1.0"},
           {"command", "bandwidth"},
           {"config", config_echo(o)},
           {"bandwidth", to_json(sel, true)},
           {"timing",
            {{"seconds",
              std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                            t0)
                  .count()}}}};
  emit(out, o.output);
  return 0;
}

struct SimulateOpts {
  std::string dgp = "fqrd_main";
  std::size_t n = 2000;
  int R = 400, B = 500;
  double beta1 = 0, gamma1 = 0, beta2 = 0;
  std::string check = "nullity";
  std::string table_csv;
};

int cmd_simulate(const CommonOpts& o, const SimulateOpts& so,
                 const OptRefs& refs) {
  check_alpha(o.alpha);
  McConfig cfg;
  cfg.dgp.family = dgp_from_string(so.dgp);
  cfg.dgp.n = so.n;
  cfg.dgp.beta1 = so.beta1;
  cfg.dgp.gamma1 = so.gamma1;
  cfg.dgp.beta2 = so.beta2;
  CommonOpts resolved = o;
  if (!flag_given(refs, "design"))
    resolved.design = to_string(default_family(cfg.dgp.family));
  cfg.design = make_design(resolved);
  if (!resolved.slope_jump && default_slope_jump(cfg.dgp.family))
    cfg.design.known_slope_jump = default_slope_jump(cfg.dgp.family);
  cfg.bandwidth = make_bandwidth_config(resolved);
  cfg.R = so.R;
  cfg.B = so.B;
  cfg.level = o.alpha;
  cfg.check = mc_check_from_string(so.check);
  cfg.seed = o.seed;
  cfg.threads = o.threads;

  McReport rep = run_monte_carlo(cfg);
  json out{{"schema_version", "1.0"},
           {"command", "simulate"},
           {"config",
            {{"dgp", so.dgp},
             {"design", resolved.design},
             {"check", so.check},
             {"n", so.n},
             {"R", so.R},
             {"B", so.B},
             {"beta1", so.beta1},
             {"gamma1", so.gamma1},
             {"beta2", so.beta2},
             {"level", o.alpha},
             {"seed", o.seed},
             {"bandwidth_rule", resolved.bandwidth_rule},
             {"kernel", resolved.kernel},
             {"n_theta", resolved.n_theta},
             {"n_y", resolved.n_y},
             {"a", resolved.a},
             {"threads", o.threads}}},
           {"report", to_json(rep)},
           {"timing", {{"seconds", rep.seconds}}}};
  if (!so.table_csv.empty()) {
    std::ofstream csv(so.table_csv);
    if (!csv) throw std::runtime_error("cannot write table CSV: " + so.table_csv);
    csv << "dgp,design,check,n,R,B,beta1,gamma1,beta2,rate,se,successes,"
           "failures,failure_rate,flagged,mean_h1,mean_h2\n";
    csv.precision(17);
    csv << so.dgp << "," << resolved.design << "," << so.check << "," << so.n
        << "," << so.R << "," << so.B << "," << so.beta1 << "," << so.gamma1
        << "," << so.beta2 << "," << rep.rate << "," << rep.se << ","
        << rep.successes << "," << rep.failures << "," << rep.failure_rate
        << "," << (rep.flagged ? 1 : 0) << "," << rep.mean_h1 << ","
        << rep.mean_h2 << "\n";
  }
  emit(out, o.output);
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"uniform inference for regression discontinuity and kink designs"};
  app.require_subcommand(1);

  CommonOpts est_o, test_o, bw_o, sim_o;
  OptRefs est_refs, test_refs, bw_refs, sim_refs;
  std::string test_kind = "nullity";
  SimulateOpts so;

  CLI::App* est_cmd =
      app.add_subcommand("estimate", "estimate, bootstrap, and band");
  add_common(est_cmd, est_o, est_refs, true);

  CLI::App* test_cmd = app.add_subcommand("test", "run one bootstrap test");
  add_common(test_cmd, test_o, test_refs, true);
  test_cmd->add_option("--kind", test_kind,
                       "nullity | homogeneity | dominance");

  CLI::App* bw_cmd =
      app.add_subcommand("bandwidth", "print the bandwidth selection plan");
  add_common(bw_cmd, bw_o, bw_refs, true);

  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo harness");
  add_common(sim_cmd, sim_o, sim_refs, false);
  sim_cmd->add_option("--dgp", so.dgp, "data generating process");
  sim_cmd->add_option("--n", so.n, "sample size per replication");
  sim_cmd->add_option("--R", so.R, "Monte Carlo replications");
  sim_cmd->add_option("--B", so.B, "bootstrap draws per replication");
  sim_cmd->add_option("--beta1", so.beta1, "effect level");
  sim_cmd->add_option("--gamma1", so.gamma1, "effect heterogeneity");
  sim_cmd->add_option("--beta2", so.beta2, "group-2 effect level");
  sim_cmd->add_option("--check", so.check, "nullity | homogeneity | coverage");
  sim_cmd->add_option("--table-csv", so.table_csv,
                      "write the per-cell frequency row as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (est_cmd->parsed()) {
      apply_config_file(est_o, est_refs);
      return cmd_estimate(est_o);
    }
    if (test_cmd->parsed()) {
      apply_config_file(test_o, test_refs);
      return cmd_test(test_o, test_kind);
    }
    if (bw_cmd->parsed()) {
      apply_config_file(bw_o, bw_refs);
      return cmd_bandwidth(bw_o);
    }
    if (sim_cmd->parsed()) {
      apply_config_file(sim_o, sim_refs);
      return cmd_simulate(sim_o, so, sim_refs);
    }
    throw std::logic_error("no subcommand parsed");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace rdu
