// Command-line laboratory for Donaldson heat flows on twisted torus bundles:
// run flows, extract destabilizing subsheaf data from blow-ups, solve the
// holomorphic-frame gauge problem on truncated power series, and run the
// built-in invariant check suites.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hef/destabilizer.hpp"
#include "hef/field_io.hpp"
#include "hef/frobenius.hpp"
#include "hef/parallel.hpp"
#include "hef/random_fields.hpp"
#include "hef/scenario.hpp"
#include "hef/series_json.hpp"

namespace {

using nlohmann::json;

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open \"" + path + "\"");
  json j;
  in >> j;
  return j;
}

struct ScenarioArgs {
  std::string scenario_path;
  std::string preset;
  std::string out_dir;
  std::uint64_t seed = 0;  // 0 = keep scenario seed
  bool has_seed = false;
};

hef::Scenario resolve_scenario(const ScenarioArgs& a) {
  if (a.scenario_path.empty() == a.preset.empty())
    throw std::runtime_error("pass exactly one of --scenario or --preset");
  hef::Scenario s = a.scenario_path.empty()
                        ? hef::scenario_preset(a.preset)
                        : hef::scenario_from_json(load_json_file(a.scenario_path));
  if (a.has_seed) s.seed = a.seed;
  if (!a.out_dir.empty()) s.out_dir = a.out_dir;
  return s;
}

void add_scenario_flags(CLI::App* cmd, ScenarioArgs& a) {
  cmd->add_option("--scenario", a.scenario_path, "scenario JSON file");
  cmd->add_option("--preset", a.preset, "named scenario preset");
  cmd->add_option("--out", a.out_dir, "output directory");
  cmd->add_option("--seed", a.seed, "override the bundle seed")->each([&a](const std::string&) {
    a.has_seed = true;
  });
}

json scenario_header(const hef::Scenario& s) {
  return {{"scenario", hef::scenario_to_json(s)},
          {"scenario_hash", hex64(hef::scenario_hash(s))}};
}

int cmd_flow(const ScenarioArgs& args) {
  const hef::Scenario s = resolve_scenario(args);
  const hef::TorusGeometry g = hef::make_geometry(s);
  const hef::Bundle E = hef::make_bundle(s, g);
  const hef::FlowTrajectory traj = hef::run_flow(E, s.flow);

  std::filesystem::create_directories(s.out_dir);
  hef::write_flow_csv(s.out_dir + "/diagnostics.csv", traj.series);
  json report = scenario_header(s);
  report["verdict"] = hef::to_string(traj.verdict);
  report["abort_reason"] = traj.abort_reason;
  report["accepted_steps"] = traj.accepted;
  report["rejected_steps"] = traj.rejected;
  report["mono_violation"] = traj.mono_violation;
  json snaps = json::array();
  for (size_t k = 0; k < traj.snapshots.size(); ++k) {
    char name[64];
    std::snprintf(name, sizeof(name), "snapshot_%03zu.fld", k);
    hef::write_field(s.out_dir + "/" + name, traj.snapshots[k].h);
    snaps.push_back({{"t", traj.snapshots[k].t},
                     {"file", name},
                     {"residual", traj.snapshots[k].residual},
                     {"sup_h", traj.snapshots[k].sup_h}});
  }
  report["snapshots"] = snaps;
  if (!traj.series.t.empty()) {
    report["final"] = {{"t", traj.series.t.back()},
                       {"residual", traj.series.residual.back()},
                       {"sup_h", traj.series.sup_h.back()}};
  }
  hef::atomic_write_text(s.out_dir + "/report.json", report.dump(2) + "\n");

  std::cout << "verdict: " << hef::to_string(traj.verdict);
  if (!traj.abort_reason.empty()) std::cout << " (" << traj.abort_reason << ")";
  std::cout << "  t_final=" << (traj.series.t.empty() ? 0.0 : traj.series.t.back())
            << "  residual=" << (traj.series.residual.empty() ? 0.0 : traj.series.residual.back())
            << "  sup|h|=" << (traj.series.sup_h.empty() ? 0.0 : traj.series.sup_h.back())
            << "\n";
  if (traj.verdict == hef::FlowVerdict::Converged || traj.verdict == hef::FlowVerdict::BlowUp)
    return 0;
  return traj.verdict == hef::FlowVerdict::Timeout ? 2 : 3;
}

void write_eigenvalue_histogram(const std::string& path, const hef::TwistedField& h_inf,
                                const std::vector<unsigned char>& mask) {
  // log10-spaced half-decade bins covering 1e-18..1e2; smaller values land in
  // the first bin.
  const int nbins = 40;
  std::vector<long> count(nbins, 0);
  const hef::TorusGeometry& g = *h_inf.geom;
  for (long p = 0; p < g.points(); ++p) {
    if (!mask.empty() && mask[static_cast<size_t>(p)]) continue;
    Eigen::SelfAdjointEigenSolver<hef::MatC> es(h_inf[p]);
    for (int i = 0; i < es.eigenvalues().size(); ++i) {
      const double lg = std::log10(std::max(es.eigenvalues()[i], 1e-300));
      int b = static_cast<int>(std::floor((lg + 18.0) * 2.0));
      b = std::max(0, std::min(nbins - 1, b));
      ++count[static_cast<size_t>(b)];
    }
  }
  std::string text = "bin_lo,bin_hi,count\n";
  char buf[128];
  for (int b = 0; b < nbins; ++b) {
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,%ld\n", std::pow(10.0, -18.0 + 0.5 * b),
                  std::pow(10.0, -18.0 + 0.5 * (b + 1)), count[static_cast<size_t>(b)]);
    text += buf;
  }
  hef::atomic_write_text(path, text);
}

int cmd_destab(const ScenarioArgs& args) {
  const hef::Scenario s = resolve_scenario(args);
  const hef::TorusGeometry g = hef::make_geometry(s);
  const hef::Bundle E = hef::make_bundle(s, g);
  const hef::FlowTrajectory traj = hef::run_flow(E, s.flow);
  if (traj.verdict != hef::FlowVerdict::BlowUp) {
    std::cerr << "destab: flow verdict is " << hef::to_string(traj.verdict)
              << "; destabilizing data exists only for blow-ups\n";
    return 3;
  }
  const hef::DestabReport rep = hef::destabilize_verdict(E, traj, s.analysis);

  std::filesystem::create_directories(s.out_dir);
  write_eigenvalue_histogram(s.out_dir + "/h_inf_eigenvalues.csv", rep.limit.h_inf,
                             rep.limit.mask);
  long masked = 0;
  for (unsigned char m : rep.limit.mask) masked += m ? 1 : 0;
  long exceptional = 0;
  for (unsigned char e : rep.proj.exceptional) exceptional += e ? 1 : 0;

  json report = scenario_header(s);
  report["verdict"] = hef::to_string(traj.verdict);
  report["t_final"] = traj.series.t.empty() ? 0.0 : traj.series.t.back();
  report["subsheaf_rank"] = rep.proj.k;
  report["mu_subsheaf"] = rep.mu_sub;
  report["mu_bundle"] = rep.mu_bundle;
  report["slope_ok"] = rep.slope_ok;
  report["projection"] = {
      {"tau", rep.proj.tau},
      {"sigma_agreement", rep.proj.sigma_agreement},
      {"algebra_defect", hef::projection_algebra_defect(rep.proj.pi, rep.limit.mask)},
      {"exceptional_cells", exceptional}};
  report["limit"] = {{"cauchy_gaps", rep.limit.gaps}, {"masked_cells", masked}};
  hef::atomic_write_text(s.out_dir + "/destab.json", report.dump(2) + "\n");

  std::cout << "subsheaf rank k=" << rep.proj.k << "  mu(F)=" << rep.mu_sub
            << "  mu(E)=" << rep.mu_bundle
            << (rep.slope_ok ? "  (destabilizing)" : "  (slope test FAILED)") << "\n";
  return rep.slope_ok ? 0 : 1;
}

int cmd_frobenius(const std::string& problem_path, const std::string& out_path, bool force_exact,
                  bool force_float) {
  const json problem = load_json_file(problem_path);
  if (!problem.contains("f")) throw std::runtime_error("frobenius: problem file needs \"f\"");
  std::string mode = problem.contains("mode") ? problem.at("mode").get<std::string>() : "exact";
  if (force_exact) mode = "exact";
  if (force_float) mode = "float";
  if (mode != "exact" && mode != "float")
    throw std::runtime_error("frobenius: mode must be \"exact\" or \"float\"");

  const auto run = [&](auto scalar_tag) -> json {
    using S = decltype(scalar_tag);
    hef::TruncSeries<S> f = hef::series_from_json<S>(problem.at("f"));
    std::vector<hef::TruncSeries<S>> A;
    if (problem.contains("A")) {
      for (const auto& jk : problem.at("A")) A.push_back(hef::series_from_json<S>(jk));
    } else {
      A = hef::relation_matrix(f);
    }
    hef::FrameResult<S> res = hef::holomorphic_frame(f, A);
    json out;
    out["mode"] = mode;
    out["g"] = hef::series_to_json(res.g);
    out["B_total"] = hef::series_to_json(res.B_total);
    out["stage_residuals"] = res.stage_residuals;
    out["final_residuals"] = res.final_residuals;
    out["certified_exact"] = hef::ScalarOps<S>::exact;
    return out;
  };

  json out = mode == "exact" ? run(hef::RatComplex{}) : run(hef::cplx{});
  hef::atomic_write_text(out_path, out.dump(2) + "\n");
  std::cout << "holomorphic frame written to " << out_path << " (mode " << mode << ")\n";
  return 0;
}

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

void print_rows(const std::vector<CheckRow>& rows) {
  for (const auto& r : rows)
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  " << r.detail << "\n";
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

// Conservation of the curvature-trace integral and of det h along short runs.
std::vector<CheckRow> suite_trace() {
  std::vector<CheckRow> rows;
  for (const std::string name : {"split_1_-1", "stable_extension_r2"}) {
    hef::Scenario s = hef::scenario_preset(name);
    s.flow.t_max = name == "stable_extension_r2" ? 0.3 : 1.0;
    const hef::TorusGeometry g = hef::make_geometry(s);
    const hef::Bundle E = hef::make_bundle(s, g);
    const hef::FlowTrajectory traj = hef::run_flow(E, s.flow);
    const double target = 2.0 * hef::kPi * E.mu() * E.rank();
    double worst_trace = 0.0, worst_det = 0.0;
    for (double v : traj.series.trace_integral)
      worst_trace = std::max(worst_trace, std::abs(v - target));
    for (double v : traj.series.det_drift) worst_det = std::max(worst_det, std::abs(v));
    rows.push_back({"trace integral conserved (" + name + ")", worst_trace < 1e-6,
                    fmt("max |deviation| = %.3e", worst_trace)});
    rows.push_back({"unit determinant held (" + name + ")", worst_det < 1e-10,
                    fmt("max |det h - 1| = %.3e", worst_det)});
  }
  return rows;
}

// Integration-by-parts defect must shrink at the stencil order under grid
// refinement; the fields are grid-independent by construction.
std::vector<CheckRow> suite_ibp(std::uint64_t seed) {
  std::vector<double> defects;
  for (long grid : {64L, 128L, 256L}) {
    hef::Scenario sc;
    sc.n = 1;
    sc.grid = grid;
    sc.block_ranks = {1, 1};
    sc.degrees = {1, -1};
    const hef::TorusGeometry g = hef::make_geometry(sc);
    const hef::Bundle E = hef::make_bundle(sc, g);
    hef::SplitMix64 rng{seed};
    const hef::TwistedField h =
        hef::random_metric(g, E.blocks().index_degrees(), 2, 0.3, rng);
    defects.push_back(std::abs(hef::energy_identity_defect(E, h).defect));
  }
  const double rate = 0.5 * std::log2(defects[0] / defects[2]);
  const bool ordered = defects[0] > defects[1] && defects[1] > defects[2] && defects[2] > 0.0;
  std::vector<CheckRow> rows;
  rows.push_back({"energy identity defect refines at stencil order", ordered && rate >= 1.8,
                  fmt("defects %.3e / %.3e / %.3e", defects[0], defects[1], defects[2]) +
                      fmt(", rate %.2f", rate)});
  return rows;
}

// Pointwise sigma-power inequality on random positive fields; sigma = 1 is an
// exact algebraic identity.
std::vector<CheckRow> suite_uy(std::uint64_t seed) {
  hef::Scenario sc;
  sc.n = 1;
  sc.grid = 32;
  sc.block_ranks = {1, 1};
  sc.degrees = {0, 0};
  const hef::TorusGeometry g = hef::make_geometry(sc);
  const hef::Bundle E = hef::make_bundle(sc, g);
  hef::SplitMix64 rng{seed};

  const int fields = 50;
  double worst = -1e300, worst_allowed = 0.0;
  bool equality_ok = true;
  for (int i = 0; i < fields; ++i) {
    const hef::TwistedField h =
        hef::random_metric(g, E.blocks().index_degrees(), 2, 0.2, rng);
    for (int s10 = 1; s10 <= 9; ++s10) {
      const hef::UyResult r = hef::uy_inequality_check(E, h, 0.1 * s10);
      if (r.max_violation > worst) {
        worst = r.max_violation;
        worst_allowed = 1e-8 * r.scale;
      }
    }
    const hef::UyResult eq = hef::uy_inequality_check(E, h, 1.0);
    equality_ok = equality_ok && eq.equality_case && eq.max_violation == 0.0;
  }
  std::vector<CheckRow> rows;
  rows.push_back({"sigma-power inequality (50 fields x 9 sigma)", worst <= worst_allowed,
                  fmt("max violation %.3e (allowed %.3e)", worst, worst_allowed)});
  rows.push_back({"sigma = 1 equality is exact", equality_ok,
                  equality_ok ? "violation identically 0" : "violation nonzero"});
  return rows;
}

// The presets whose flows end in BlowUp; the limit-analysis suites quantify
// over all of them.
const std::vector<std::string>& blowup_presets() {
  static const std::vector<std::string> names = {"split_1_-1", "split_2_0",
                                                 "unstable_extension_r2"};
  return names;
}

// One full preset flow, memoized so the limit-analysis suites share runs.
// Heap-held because the bundle refers to the geometry by address.
struct PresetRun {
  hef::Scenario s;
  hef::TorusGeometry g;
  hef::Bundle E;
  hef::FlowTrajectory traj;
  explicit PresetRun(hef::Scenario sc)
      : s(std::move(sc)),
        g(hef::make_geometry(s)),
        E(hef::make_bundle(s, g)),
        traj(hef::run_flow(E, s.flow)) {}
};

const PresetRun& preset_run(const std::string& name) {
  static std::map<std::string, std::unique_ptr<PresetRun>> cache;
  auto it = cache.find(name);
  if (it == cache.end())
    it = cache.emplace(name, std::make_unique<PresetRun>(hef::scenario_preset(name))).first;
  return *it->second;
}

// Mean-value lower bound on every snapshot of every blow-up preset.
std::vector<CheckRow> suite_harnack() {
  std::vector<CheckRow> rows;
  for (const std::string& name : blowup_presets()) {
    const PresetRun& run = preset_run(name);
    bool all_ok = run.traj.verdict == hef::FlowVerdict::BlowUp && !run.traj.snapshots.empty();
    double min_margin = 1e300;
    for (const hef::Snapshot& snap : run.traj.snapshots) {
      const hef::HarnackResult r = hef::harnack_check(run.E, snap.h);
      all_ok = all_ok && r.ok;
      min_margin = std::min(min_margin, r.c - r.bound);
    }
    rows.push_back({"mean-value bound on all snapshots (" + name + ")", all_ok,
                    fmt("min (c - exp(-C)) = %.3e over %.0f snapshots", min_margin,
                        static_cast<double>(run.traj.snapshots.size()))});
  }
  return rows;
}

// Destabilizing-subsheaf extraction on the split presets, where the limit is
// known in closed form.
std::vector<CheckRow> suite_projection() {
  struct Case {
    const char* preset;
    double mu_expected;
  };
  std::vector<CheckRow> rows;
  for (const Case cs : {Case{"split_1_-1", 1.0}, Case{"split_2_0", 2.0}}) {
    const hef::Scenario s = hef::scenario_preset(cs.preset);
    const hef::TorusGeometry g = hef::make_geometry(s);
    const hef::Bundle E = hef::make_bundle(s, g);
    const hef::FlowTrajectory traj = hef::run_flow(E, s.flow);
    const std::string tag = std::string(" (") + cs.preset + ")";
    if (traj.verdict != hef::FlowVerdict::BlowUp) {
      rows.push_back({"flow blows up" + tag, false,
                      std::string("verdict ") + hef::to_string(traj.verdict)});
      continue;
    }
    const hef::DestabReport rep = hef::destabilize_verdict(E, traj, s.analysis);
    rows.push_back({"subsheaf rank is 1" + tag, rep.proj.k == 1,
                    fmt("k = %.0f", static_cast<double>(rep.proj.k))});
    rows.push_back({"subsheaf slope matches and destabilizes" + tag,
                    std::abs(rep.mu_sub - cs.mu_expected) < 1e-3 && rep.slope_ok,
                    fmt("mu(F) = %.6f (expected %.1f), mu(E) = %.3f", rep.mu_sub,
                        cs.mu_expected, rep.mu_bundle)});
    const double defect = hef::projection_algebra_defect(rep.proj.pi, rep.limit.mask);
    rows.push_back({"projection idempotent and Hermitian" + tag, defect <= 1e-8,
                    fmt("max algebra defect %.3e", defect)});
    rows.push_back({"sigma-route agrees with eigen-route" + tag,
                    rep.proj.sigma_agreement <= 1e-6,
                    fmt("max disagreement %.3e", rep.proj.sigma_agreement)});
  }
  return rows;
}

// The two membership tests (L2 decay vs limit kernel) must agree on probe
// sections drawn from kernel, complement, and mixed families.
std::vector<CheckRow> suite_membership(std::uint64_t seed) {
  const hef::Scenario s = hef::scenario_preset("split_1_-1");
  const hef::TorusGeometry g = hef::make_geometry(s);
  const hef::Bundle E = hef::make_bundle(s, g);
  const hef::FlowTrajectory traj = hef::run_flow(E, s.flow);
  std::vector<CheckRow> rows;
  if (traj.verdict != hef::FlowVerdict::BlowUp) {
    rows.push_back({"flow blows up (split_1_-1)", false,
                    std::string("verdict ") + hef::to_string(traj.verdict)});
    return rows;
  }
  const hef::DestabReport rep = hef::destabilize_verdict(E, traj, s.analysis);
  const std::vector<hef::TwistedField> probes =
      hef::membership_probe_sections(E, rep.proj.pi, 20, seed);
  int agree = 0, members = 0;
  for (const hef::TwistedField& probe : probes) {
    const hef::Membership m =
        hef::multiplier_membership(probe, traj.snapshots, rep.limit.h_inf, s.analysis.delta_mem);
    if (m.by_integral == m.by_kernel) ++agree;
    if (m.by_kernel) ++members;
  }
  rows.push_back({"membership tests agree on 20 probe sections", agree == 20,
                  fmt("%.0f/20 agree, %.0f members", static_cast<double>(agree),
                      static_cast<double>(members))});
  return rows;
}

int cmd_check(const std::string& suite, std::uint64_t seed) {
  struct Entry {
    const char* name;
    std::function<std::vector<CheckRow>()> run;
  };
  const std::vector<Entry> entries = {
      {"trace", [] { return suite_trace(); }},
      {"ibp", [seed] { return suite_ibp(seed); }},
      {"uy", [seed] { return suite_uy(seed); }},
      {"harnack", [] { return suite_harnack(); }},
      {"projection", [] { return suite_projection(); }},
      {"membership", [seed] { return suite_membership(seed); }},
  };

  std::vector<CheckRow> rows;
  bool known = false;
  for (const Entry& e : entries) {
    if (suite == "all" || suite == e.name) {
      known = true;
      std::vector<CheckRow> part = e.run();
      rows.insert(rows.end(), part.begin(), part.end());
    }
  }
  if (!known) {
    std::string names = "all";
    for (const Entry& e : entries) names += std::string(", ") + e.name;
    throw std::runtime_error("unknown suite \"" + suite + "\" (choices: " + names + ")");
  }

  print_rows(rows);
  bool ok = true;
  for (const CheckRow& r : rows) ok = ok && r.pass;
  std::cout << (ok ? "all checks passed" : "CHECKS FAILED") << " (" << rows.size()
            << " rows)\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Donaldson heat flow laboratory on twisted torus bundles"};
  app.require_subcommand(1);
  app.fallthrough();

  ScenarioArgs flow_args;
  CLI::App* flow_cmd = app.add_subcommand("flow", "integrate a heat flow scenario");
  add_scenario_flags(flow_cmd, flow_args);

  ScenarioArgs destab_args;
  CLI::App* destab_cmd =
      app.add_subcommand("destab", "run a blow-up flow and extract the destabilizing data");
  add_scenario_flags(destab_cmd, destab_args);

  std::string problem_path, solution_path = "frobenius_solution.json";
  bool force_exact = false, force_float = false;
  CLI::App* frob_cmd =
      app.add_subcommand("frobenius", "solve a holomorphic-frame gauge problem on power series");
  frob_cmd->add_option("--problem", problem_path, "problem JSON file")->required();
  frob_cmd->add_option("--out", solution_path, "solution JSON file");
  frob_cmd->add_flag("--exact", force_exact, "force exact rational coefficients");
  frob_cmd->add_flag("--float", force_float, "force floating-point coefficients");

  std::string suite = "all";
  std::uint64_t check_seed = 2026;
  CLI::App* check_cmd = app.add_subcommand("check", "run the invariant check suites");
  check_cmd->add_option("--suite", suite,
                        "suite: ibp | uy | harnack | trace | projection | membership | all");
  check_cmd->add_option("--seed", check_seed, "random seed for the check fields");

  int threads = 1;
  app.add_option("--threads", threads, "worker threads for grid kernels");

  CLI11_PARSE(app, argc, argv);
  hef::set_thread_count(threads);

  try {
    if (*flow_cmd) return cmd_flow(flow_args);
    if (*destab_cmd) return cmd_destab(destab_args);
    if (*frob_cmd) return cmd_frobenius(problem_path, solution_path, force_exact, force_float);
    if (*check_cmd) return cmd_check(suite, check_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
