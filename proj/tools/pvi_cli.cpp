// pvi_cli: run elliptic Painlevé VI experiments from a config file and write
// a CSV table plus a JSON manifest per run.
//
// Exit codes: 0 success, 1 verification failure, 2 input error,
// 3 numerical abort (a last-good-state dump is written next to the manifest).

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pvi/calogero_limit.hpp"
#include "pvi/config.hpp"
#include "pvi/content_hash.hpp"
#include "pvi/curve_morphism.hpp"
#include "pvi/io.hpp"
#include "pvi/lax_system.hpp"
#include "pvi/monodromy.hpp"
#include "pvi/painleve_models.hpp"
#include "pvi/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace pvi;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerify = 1;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

struct LastGood {
  bool set = false;
  double s = 0.0;
  std::string coordinate = "tau";
  cplx point{};
  std::vector<std::pair<std::string, cplx>> values;

  void capture_state(double s_, const PhaseState& st) {
    set = true;
    s = s_;
    coordinate = "tau";
    point = st.tau;
    values.clear();
    for (Eigen::Index j = 0; j < st.size(); ++j) values.emplace_back("u" + std::to_string(j), st.u[j]);
    for (Eigen::Index j = 0; j < st.size(); ++j) values.emplace_back("v" + std::to_string(j), st.v[j]);
  }
};

struct Outcome {
  CsvTable table;
  json results = json::object();
  bool verified = true;
};

struct RunContext {
  RunConfig cfg;
  std::string subcommand;
  LastGood last_good;
};

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

std::vector<double> uniform_samples(int n) {
  std::vector<double> s;
  for (int i = 0; i < n; ++i) s.push_back(static_cast<double>(i) / (n - 1));
  return s;
}

PathSpec tau_path(const RunConfig& c) {
  PathSpec p;
  p.waypoints = c.waypoints;
  p.rtol = c.rtol;
  p.atol = c.atol;
  p.max_step = c.max_step;
  return p;
}

ModelParams model_params(const RunConfig& c) {
  ModelParams p = ModelParams::from_elliptic(c.alpha_vec);
  p.set_nu(c.nu).set_kappa(c.kappa);
  return p;
}

PhaseState scalar_state(const RunConfig& c) {
  if (c.u.size() != 1) throw ValidationError("state.u must hold a single value for the elliptic flow");
  return PhaseState::scalar(c.u[0], c.v[0], c.waypoints.front());
}

PhaseState multi_state(const RunConfig& c, cplx tau) {
  PhaseState s;
  const auto n = static_cast<Eigen::Index>(c.multi_u.size());
  s.u = Eigen::Map<const VecC>(c.multi_u.data(), n);
  s.v = Eigen::Map<const VecC>(c.multi_v.data(), n);
  s.tau = tau;
  s.centered = c.centered;
  return s;
}

Trajectory run_flow(RunContext& rc, FlowModel model, const PhaseState& init, int samples) {
  const auto ss = uniform_samples(samples);
  return integrate_flow(model, init, model_params(rc.cfg), tau_path(rc.cfg), ss,
                        [&rc](double s, const PhaseState& st) { rc.last_good.capture_state(s, st); });
}

json step_stats(const Trajectory& t) {
  return {{"accepted_steps", t.accepted_steps}, {"rejected_steps", t.rejected_steps}, {"samples", t.size()}};
}

// ---------------------------------------------------------------------------

Outcome cmd_integrate_elliptic(RunContext& rc) {
  const auto traj = run_flow(rc, FlowModel::Elliptic, scalar_state(rc.cfg), rc.cfg.samples);
  return {trajectory_table(traj), step_stats(traj), true};
}

Outcome cmd_integrate_multi(RunContext& rc) {
  const auto traj = run_flow(rc, FlowModel::Multicomponent, multi_state(rc.cfg, rc.cfg.waypoints.front()),
                             rc.cfg.samples);
  return {trajectory_table(traj), step_stats(traj), true};
}

Outcome cmd_integrate_rational(RunContext& rc) {
  const RunConfig& c = rc.cfg;
  const RationalConstants rc_consts = param_map_inverse(c.alpha_vec);
  PathSpec path;
  path.waypoints = c.t_waypoints;
  path.rtol = c.rtol;
  path.atol = c.atol;
  path.max_step = c.max_step;
  path.is_tau_path = false;
  auto f = [&](cplx t, const VecC& y) -> VecC {
    VecC out(2);
    out << y[1], pvi_rational_rhs(y[0], y[1], t, rc_consts);
    return out;
  };
  VecC y0(2);
  y0 << c.X0, c.Xdot0;
  const auto ss = uniform_samples(c.samples);
  const auto res = integrate_path(f, y0, path, ss, [&](double s, const VecC& y) {
    rc.last_good.set = true;
    rc.last_good.s = s;
    rc.last_good.coordinate = "t";
    rc.last_good.point = path.point(s);
    rc.last_good.values = {{"X", y[0]}, {"Xdot", y[1]}};
  });
  CsvTable t;
  t.real_column("s").complex_column("t").complex_column("X").complex_column("Xdot");
  for (std::size_t i = 0; i < res.s.size(); ++i) {
    CsvTable::Row r;
    r << res.s[i] << path.point(res.s[i]) << res.y[i][0] << res.y[i][1];
    t.add(r);
  }
  json out = {{"accepted_steps", res.accepted_steps},
              {"rejected_steps", res.rejected_steps},
              {"rational_constants",
               {{"alpha", complex_json(rc_consts.alpha)},
                {"beta", complex_json(rc_consts.beta)},
                {"gamma", complex_json(rc_consts.gamma)},
                {"delta", complex_json(rc_consts.delta)}}}};
  return {t, out, true};
}

Outcome cmd_map(RunContext& rc) {
  if (rc.cfg.waypoints.size() != 2) throw ValidationError("map needs a straight path (two waypoints)");
  if (rc.cfg.samples < 5) throw ValidationError("map needs path.samples >= 5");
  const auto traj = run_flow(rc, FlowModel::Elliptic, scalar_state(rc.cfg), rc.cfg.samples);
  const auto rt = pushforward_trajectory(traj);
  const auto consts = traj.params.rational();
  const auto res = pushforward_residuals(rt, consts);
  constexpr double kTol = 1e-5;
  CsvTable t;
  t.real_column("s").complex_column("tau").complex_column("t").complex_column("X").complex_column("dXdt");
  t.complex_column("d2Xdt2").real_column("residual_abs").real_column("residual_rel");
  double worst = 0.0;
  for (std::size_t i = 0; i < rt.X.size(); ++i) {
    CsvTable::Row r;
    r << rt.s[i] << rt.tau[i] << rt.t[i] << rt.X[i] << rt.dXdt[i] << rt.d2Xdt2[i] << res[i].abs << res[i].rel;
    t.add(r);
    worst = std::max(worst, res[i].rel);
  }
  json out = step_stats(traj);
  out["max_residual_rel"] = worst;
  out["residual_tolerance"] = kTol;
  return {t, out, worst <= kTol};
}

Outcome cmd_calogero(RunContext& rc) {
  const RunConfig& c = rc.cfg;
  CriticalConfig cc;
  cc.tau0 = c.calogero_tau0;
  cc.nu = c.nu;
  cc.alpha_vec = c.alpha_vec;
  cc.N = static_cast<int>(c.multi_u.size());
  cc.dt = c.dt;
  cc.nsteps = c.nsteps;
  const PhaseState s0 = multi_state(c, cc.tau0);
  rc.last_good.capture_state(0.0, s0);
  const auto run = calogero_leapfrog(s0.u, s0.v, cc, c.record_every);
  const EllipticContext ctx(cc.tau0);
  CsvTable t;
  t.real_column("t");
  for (std::size_t j = 0; j < c.multi_u.size(); ++j) t.complex_column("u" + std::to_string(j));
  for (std::size_t j = 0; j < c.multi_u.size(); ++j) t.complex_column("v" + std::to_string(j));
  t.complex_column("H").complex_column("H_shadow");
  for (std::size_t i = 0; i < run.t.size(); ++i) {
    CsvTable::Row r;
    r << run.t[i] << run.q[i] << run.p[i] << calogero_energy(run.q[i], run.p[i], cc, ctx)
      << calogero_shadow_energy(run.q[i], run.p[i], cc.dt, cc, ctx);
    t.add(r);
  }
  const auto rep = calogero_energy_report(run, cc.dt, cc);
  json out = {{"steps", c.nsteps},
              {"dt", c.dt},
              {"H0", complex_json(rep.H0)},
              {"shadow_energy_drift_rel", rep.drift_rel},
              {"energy_oscillation_rel", rep.oscillation_rel}};
  return {t, out, true};
}

Outcome cmd_scaling_limit(RunContext& rc) {
  const RunConfig& c = rc.cfg;
  if (c.u.size() != 1) throw ValidationError("state.u must hold a single value for the scaling limit");
  CriticalConfig cc;
  cc.tau0 = c.calogero_tau0;
  cc.nu = c.nu;
  cc.alpha_vec = c.alpha_vec;
  cc.N = 1;
  const auto rows = scaling_limit_compare(c.kappas, c.u[0], c.v[0], cc, c.horizon, c.samples, c.rtol, c.atol);
  CsvTable t;
  t.real_column("kappa").real_column("deviation").real_column("order").real_column("ratio");
  json table = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double ratio = i ? rows[i - 1].deviation / rows[i].deviation : std::nan("");
    CsvTable::Row r;
    r << rows[i].kappa << rows[i].deviation << rows[i].order << ratio;
    t.add(r);
    table.push_back({{"kappa", rows[i].kappa}, {"deviation", rows[i].deviation}});
  }
  return {t, {{"rows", table}, {"horizon", c.horizon}}, true};
}

Outcome cmd_lax_verify(RunContext& rc) {
  const RunConfig& c = rc.cfg;
  const LaxParams lp = c.lax_params();
  lp.validate();
  constexpr double kFeTol = 1e-10;
  constexpr double kFlatTol = 1e-6;
  constexpr double kLaxTol = 1e-5;
  CsvTable t;
  t.real_column("suite").real_column("index").complex_column("w").complex_column("tau");
  t.real_column("residual").real_column("scale").real_column("rel_residual").real_column("tolerance");
  t.real_column("pass");
  json summary = json::object();
  bool all_ok = true;
  auto add = [&](const std::string& suite, int idx, cplx w, cplx tau, double res, double scale, bool relative,
                 double tol) {
    const double rel = scale > 0.0 ? res / scale : res;
    const double measured = relative ? rel : res;
    const bool pass = std::isfinite(measured) && measured <= tol;
    all_ok = all_ok && pass;
    CsvTable::Row r;
    r << suite << idx << w << tau << res << scale << rel << tol << (pass ? "1" : "0");
    t.add(r);
    auto& s = summary[suite];
    if (s.is_null()) s = {{"checks", 0}, {"passed", 0}, {"max_measured", 0.0}, {"tolerance", tol}};
    s["checks"] = s["checks"].get<int>() + 1;
    s["passed"] = s["passed"].get<int>() + (pass ? 1 : 0);
    s["max_measured"] = std::max(s["max_measured"].get<double>(), measured);
  };

  // Functional equation at random (u, v̂, w) around the first waypoint.
  Lcg g(c.seed);
  const cplx tau_a = c.waypoints.front();
  const EllipticContext ctx_a(tau_a);
  for (int k = 0; k < c.fe_samples; ++k) {
    const cplx u = detail::random_point(g, tau_a, 0.1);
    cplx vh = detail::random_point(g, tau_a, 0.1);
    while (lattice_distance(u + vh, tau_a) < 0.1) vh = detail::random_point(g, tau_a, 0.1);
    const cplx w = g.uniform(0.1, 0.9) + g.uniform(0.1, 0.9) * lp.tau0;
    const auto fe = functional_eq_residual(u, vh, w, tau_a, ctx_a, lp);
    add("functional_equation", k, w, tau_a, std::abs(fe.residual), fe.scale, true, kFeTol);
  }

  // Flatness of L at the probes.
  const PhaseState s0 = multi_state(c, tau_a);
  for (std::size_t k = 0; k < c.probes.size(); ++k) {
    add("flatness", static_cast<int>(k), c.probes[k], tau_a,
        flatness_residual(s0, c.probes[k], lp, ctx_a, c.stencil_h), 1.0, false, kFlatTol);
  }

  // Lax equation along the integrated trajectory.
  if (c.waypoints.size() != 2) throw ValidationError("lax-verify needs a straight path (two waypoints)");
  const auto traj = run_flow(rc, FlowModel::Multicomponent, s0, c.samples);
  int idx = 0;
  for (const cplx w : c.probes) {
    for (const auto& row : lax_residual(traj, w, lp, c.stencil_h)) {
      add("lax_equation", idx++, w, row.tau, row.residual, row.scale, true, kLaxTol);
    }
  }
  json out = {{"suites", summary}, {"convention", lp.convention_tag()}};
  return {t, out, all_ok};
}

Outcome cmd_monodromy(RunContext& rc) {
  const RunConfig& c = rc.cfg;
  const LaxParams lp = c.lax_params();
  lp.validate();
  constexpr double kDriftTol = 1e-4;
  const auto traj = run_flow(rc, FlowModel::Multicomponent, multi_state(c, c.waypoints.front()), c.samples);
  const auto tab = isomonodromy_drift(traj, lp);
  CsvTable t;
  t.real_column("s").complex_column("tau").complex_column("trace_A").complex_column("trace_B");
  t.complex_column("det_A").complex_column("det_B").real_column("control_deviation");
  for (const auto& r : tab.rows) {
    CsvTable::Row row;
    row << r.s << r.tau << r.trace_A << r.trace_B << r.det_A << r.det_B << r.control_deviation;
    t.add(row);
  }
  const bool drift_ok = tab.drift_trace_A <= kDriftTol && tab.drift_trace_B <= kDriftTol;
  json out = {{"status", tab.calibrated ? "CALIBRATED" : "UNCALIBRATED"},
              {"convention", tab.convention},
              {"drift_trace_A", tab.drift_trace_A},
              {"drift_trace_B", tab.drift_trace_B},
              {"drift_det_A", tab.drift_det_A},
              {"drift_det_B", tab.drift_det_B},
              {"drift_tolerance", kDriftTol},
              {"max_control_deviation", tab.max_control_deviation},
              {"control_gate", kControlGate},
              {"transport_rtol", kTransportRtol},
              {"transport_atol", kTransportAtol}};
  return {t, out, tab.calibrated && drift_ok};
}

Outcome cmd_verify(RunContext& rc) {
  const auto suites = run_property_suites(rc.cfg.seed, rc.cfg.lax_params());
  json arr = json::array();
  bool ok = true;
  for (const auto& s : suites) {
    arr.push_back({{"suite", s.name},
                   {"checks", s.checks},
                   {"passed", s.passed},
                   {"max_error", s.max_error},
                   {"tolerance", s.tolerance}});
    ok = ok && s.ok();
    std::cout << (s.ok() ? "PASS " : "FAIL ") << s.name << " " << s.passed << "/" << s.checks
              << " max_error=" << format_double(s.max_error) << " tol=" << format_double(s.tolerance) << "\n";
  }
  return {suite_table(suites), {{"suites", arr}}, ok};
}

// ---------------------------------------------------------------------------

json config_json(const RunConfig& c) {
  json j = json::object();
  std::istringstream in(format_config(c));
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find(" = ");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 3);
    if (section.empty()) {
      j[key] = value;
    } else {
      j[section][key] = value;
    }
  }
  return j;
}

json manifest(const RunContext& rc, const std::string& config_source, const std::string& config_hash,
              double tol_scale, const std::string& status, int exit_code) {
  const RunConfig& c = rc.cfg;
  return {{"tool", "pvi_cli"},
          {"subcommand", rc.subcommand},
          {"status", status},
          {"exit_code", exit_code},
          {"seed", c.seed},
          {"config_source", config_source},
          {"config_hash", config_hash},
          {"rho_convention", to_string(c.rho_convention)},
          {"exponent_frame", to_string(c.exponent_frame)},
          {"normalization", to_string(c.normalization)},
          {"tolerances",
           {{"rtol", c.rtol}, {"atol", c.atol}, {"max_step", format_double(c.max_step)}, {"tol_scale", tol_scale}}},
          {"inputs", config_json(c)}};
}

void write_last_good(const fs::path& path, const RunContext& rc, const std::string& error) {
  json j = {{"subcommand", rc.subcommand}, {"error", error}, {"captured", rc.last_good.set}};
  if (rc.last_good.set) {
    j["s"] = rc.last_good.s;
    j[rc.last_good.coordinate] = complex_json(rc.last_good.point);
    for (const auto& [k, v] : rc.last_good.values) j["state"][k] = complex_json(v);
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elliptic Painleve VI and isomonodromy experiments"};
  app.fallthrough();
  std::string config_path;
  std::string out_dir = "pvi_out";
  std::optional<unsigned long long> seed;
  double tol_scale = 1.0;
  bool print_defaults = false;
  app.add_option("--config", config_path, "Configuration file (key = value with [section] headers)");
  app.add_option("--out", out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", seed, "Seed for randomized sampling (overrides the config)");
  app.add_option("--tol-scale", tol_scale, "Multiplier applied to path.rtol and path.atol")->capture_default_str();
  app.add_flag("--print-defaults", print_defaults, "Print the default configuration and exit");

  using Handler = Outcome (*)(RunContext&);
  const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> commands = {
      {"integrate-elliptic", {"Integrate the scalar elliptic flow along the tau path", cmd_integrate_elliptic}},
      {"integrate-rational", {"Integrate the rational equation along the t path", cmd_integrate_rational}},
      {"integrate-multi", {"Integrate the N-component flow along the tau path", cmd_integrate_multi}},
      {"map", {"Push an elliptic trajectory forward to the rational equation", cmd_map}},
      {"calogero", {"Leapfrog run of the elliptic Calogero system at tau0", cmd_calogero}},
      {"scaling-limit", {"Compare the rescaled flow with the autonomous flow as kappa -> 0", cmd_scaling_limit}},
      {"lax-verify", {"Functional-equation, flatness and Lax-equation residuals", cmd_lax_verify}},
      {"monodromy", {"Cycle monodromy invariants along a trajectory", cmd_monodromy}},
      {"verify", {"Randomized invariant suites", cmd_verify}},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, info] : commands) subs.push_back(app.add_subcommand(name, info.first));
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (print_defaults) {
    std::cout << format_config(RunConfig{});
    return kExitOk;
  }

  Handler handler = nullptr;
  RunContext rc;
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) {
      handler = commands[i].second.second;
      rc.subcommand = commands[i].first;
    }
  }
  if (!handler) {
    std::cerr << app.help();
    return kExitInput;
  }

  std::string config_text;
  std::string config_source = "<defaults>";
  try {
    if (!config_path.empty()) {
      config_text = read_file(config_path);
      config_source = config_path;
      rc.cfg = parse_config(config_text);
    } else {
      config_text = format_config(rc.cfg);
    }
    if (seed) rc.cfg.seed = *seed;
    if (!(tol_scale > 0.0) || !std::isfinite(tol_scale)) throw ValidationError("--tol-scale must be positive");
    rc.cfg.rtol *= tol_scale;
    rc.cfg.atol *= tol_scale;
    rc.cfg.validate();
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  const std::string config_hash = git_blob_sha1(config_text);

  const fs::path out(out_dir);
  const fs::path csv_path = out / (rc.subcommand + ".csv");
  const fs::path manifest_path = out / (rc.subcommand + ".manifest.json");
  try {
    Outcome res = handler(rc);
    write_file_atomic(csv_path, res.table.str());
    const int code = res.verified ? kExitOk : kExitVerify;
    json m = manifest(rc, config_source, config_hash, tol_scale, res.verified ? "ok" : "verification_failed", code);
    m["outputs"] = {{"csv", csv_path.filename().string()}, {"rows", res.table.rows()}};
    m["results"] = res.results;
    write_file_atomic(manifest_path, m.dump(2) + "\n");
    std::cout << rc.subcommand << ": " << (res.verified ? "ok" : "VERIFICATION FAILED") << " (" << csv_path.string()
              << ")\n";
    return code;
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << "\n";
    try {
      const fs::path dump = out / (rc.subcommand + ".last_good_state.json");
      write_last_good(dump, rc, e.what());
      json m = manifest(rc, config_source, config_hash, tol_scale, "numerical_abort", kExitNumerical);
      m["outputs"] = {{"last_good_state", dump.filename().string()}};
      m["error"] = e.what();
      write_file_atomic(manifest_path, m.dump(2) + "\n");
    } catch (const std::exception& io) {
      std::cerr << "could not write abort dump: " << io.what() << "\n";
    }
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInput;
  }
}
