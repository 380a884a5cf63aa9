#include "hef/scenario.hpp"

#include <stdexcept>

#include "hef/field_io.hpp"
#include "hef/random_fields.hpp"

namespace hef {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error("scenario: " + msg); }

void check_keys(const nlohmann::json& obj, const std::string& section,
                const std::vector<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed) known = known || k == it.key();
    if (!known) fail("unknown key \"" + (section.empty() ? "" : section + ".") + it.key() + "\"");
  }
}

template <class T>
T get_or(const nlohmann::json& obj, const std::string& key, const T& fallback) {
  return obj.contains(key) ? obj.at(key).get<T>() : fallback;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  check_keys(j, "",
             {"name", "geometry", "bundle", "flow", "analysis", "out_dir"});
  s.name = get_or<std::string>(j, "name", "custom");
  s.out_dir = get_or<std::string>(j, "out_dir", ".");

  if (!j.contains("geometry")) fail("missing required key \"geometry\"");
  const auto& g = j.at("geometry");
  check_keys(g, "geometry", {"n", "periods", "grid"});
  s.n = get_or<int>(g, "n", 1);
  if (!g.contains("grid")) fail("missing required key \"geometry.grid\"");
  s.grid = g.at("grid").get<int>();
  s.periods = get_or<std::vector<double>>(g, "periods",
                                          std::vector<double>(static_cast<size_t>(s.n), 1.0));
  if (static_cast<int>(s.periods.size()) != s.n)
    fail("\"geometry.periods\" must list one period per complex factor");

  if (!j.contains("bundle")) fail("missing required key \"bundle\"");
  const auto& b = j.at("bundle");
  check_keys(b, "bundle",
             {"rank", "block_ranks", "degrees", "a_preset", "a_files", "seed", "amplitude",
              "band"});
  if (!b.contains("degrees")) fail("missing required key \"bundle.degrees\"");
  s.degrees = b.at("degrees").get<std::vector<int>>();
  s.block_ranks = get_or<std::vector<int>>(
      b, "block_ranks", std::vector<int>(s.degrees.size(), 1));
  if (s.block_ranks.size() != s.degrees.size())
    fail("\"bundle.block_ranks\" must match \"bundle.degrees\" in length");
  if (b.contains("rank")) {
    int r = 0;
    for (int v : s.block_ranks) r += v;
    if (b.at("rank").get<int>() != r)
      fail("\"bundle.rank\" disagrees with the block rank sum");
  }
  s.a_preset = get_or<std::string>(b, "a_preset", "direct_sum");
  s.a_files = get_or<std::vector<std::string>>(b, "a_files", {});
  s.seed = get_or<std::uint64_t>(b, "seed", 1);
  s.amplitude = get_or<double>(b, "amplitude", 0.0);
  s.band = get_or<int>(b, "band", 2);

  if (j.contains("flow")) {
    const auto& f = j.at("flow");
    check_keys(f, "flow",
               {"dt0", "t_max", "eps_residual", "blowup_sup", "snapshot_stride", "max_halvings",
                "mono_slack"});
    s.flow.dt0 = get_or<double>(f, "dt0", s.flow.dt0);
    s.flow.t_max = get_or<double>(f, "t_max", s.flow.t_max);
    s.flow.eps_residual = get_or<double>(f, "eps_residual", s.flow.eps_residual);
    s.flow.blowup_sup = get_or<double>(f, "blowup_sup", s.flow.blowup_sup);
    s.flow.snapshot_stride = get_or<int>(f, "snapshot_stride", s.flow.snapshot_stride);
    s.flow.max_halvings = get_or<int>(f, "max_halvings", s.flow.max_halvings);
    s.flow.mono_slack = get_or<double>(f, "mono_slack", s.flow.mono_slack);
    if (s.flow.t_max <= 0 || s.flow.eps_residual <= 0 || s.flow.blowup_sup <= 0 ||
        s.flow.snapshot_stride <= 0)
      fail("\"flow\" tolerances must be positive");
  }

  if (j.contains("analysis")) {
    const auto& a = j.at("analysis");
    check_keys(a, "analysis",
               {"sigma_schedule", "tau", "delta_conv", "delta_mem", "tol_slope", "eps_loc",
                "radius"});
    s.analysis.sigma_schedule =
        get_or<std::vector<double>>(a, "sigma_schedule", s.analysis.sigma_schedule);
    s.analysis.tau = get_or<double>(a, "tau", s.analysis.tau);
    s.analysis.delta_conv = get_or<double>(a, "delta_conv", s.analysis.delta_conv);
    s.analysis.delta_mem = get_or<double>(a, "delta_mem", s.analysis.delta_mem);
    s.analysis.tol_slope = get_or<double>(a, "tol_slope", s.analysis.tol_slope);
    s.analysis.eps_loc = get_or<double>(a, "eps_loc", s.analysis.eps_loc);
    s.analysis.radius = get_or<int>(a, "radius", s.analysis.radius);
    if (s.analysis.tau <= 0 || s.analysis.delta_conv <= 0 || s.analysis.delta_mem <= 0 ||
        s.analysis.tol_slope <= 0)
      fail("\"analysis\" tolerances must be positive");
  }
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["name"] = s.name;
  j["out_dir"] = s.out_dir;
  j["geometry"] = {{"n", s.n},
                   {"periods", s.periods.empty()
                                   ? std::vector<double>(static_cast<size_t>(s.n), 1.0)
                                   : s.periods},
                   {"grid", s.grid}};
  j["bundle"] = {{"block_ranks", s.block_ranks}, {"degrees", s.degrees},
                 {"a_preset", s.a_preset},       {"a_files", s.a_files},
                 {"seed", s.seed},               {"amplitude", s.amplitude},
                 {"band", s.band}};
  j["flow"] = {{"dt0", s.flow.dt0},
               {"t_max", s.flow.t_max},
               {"eps_residual", s.flow.eps_residual},
               {"blowup_sup", s.flow.blowup_sup},
               {"snapshot_stride", s.flow.snapshot_stride},
               {"max_halvings", s.flow.max_halvings},
               {"mono_slack", s.flow.mono_slack}};
  j["analysis"] = {{"sigma_schedule", s.analysis.sigma_schedule},
                   {"tau", s.analysis.tau},
                   {"delta_conv", s.analysis.delta_conv},
                   {"delta_mem", s.analysis.delta_mem},
                   {"tol_slope", s.analysis.tol_slope},
                   {"eps_loc", s.analysis.eps_loc},
                   {"radius", s.analysis.radius}};
  return j;
}

Scenario scenario_preset(const std::string& name) {
  Scenario s;
  s.name = name;
  if (name == "stable_extension_r2") {
    // Nonsplit extension of a degree-1 line by a degree-0 line: stable, so
    // the flow converges to the Hermitian-Einstein metric.  The amplitude is
    // large enough that the extension class dominates the dynamics and the
    // limit metric is far from the starting one.
    s.degrees = {0, 1};
    s.block_ranks = {1, 1};
    s.a_preset = "extension";
    s.seed = 7;
    s.amplitude = 4.0;
    s.band = 1;
    s.grid = 16;
    s.flow.t_max = 20.0;
    s.flow.snapshot_stride = 3000;
  } else if (name == "split_1_-1") {
    // Direct sum of degrees {1, -1}: destabilized by the degree-1 line; the
    // flow is the closed form h = diag(e^{-2t}, e^{2t}).
    s.degrees = {1, -1};
    s.block_ranks = {1, 1};
    s.flow.dt0 = 0.01;
    s.flow.t_max = 10.0;
    s.flow.snapshot_stride = 100;
  } else if (name == "split_2_0") {
    s.degrees = {2, 0};
    s.block_ranks = {1, 1};
    s.flow.dt0 = 0.01;
    s.flow.t_max = 10.0;
    s.flow.snapshot_stride = 100;
  } else if (name == "unstable_extension_r2") {
    // Degree-{1,-1} blocks with an upper-triangular deformation.  The
    // extension class of a degree-1 sub by a degree-(-1) quotient vanishes on
    // the torus, so the bundle is the unstable direct sum presented in a
    // sheared frame: the flow must blow up, but along a genuinely
    // non-diagonal path, and the degree-1 sub-line is the destabilizer.
    s.degrees = {1, -1};
    s.block_ranks = {1, 1};
    s.a_preset = "extension";
    s.seed = 11;
    s.amplitude = 0.5;
    s.grid = 16;
    s.flow.t_max = 12.0;
    s.flow.snapshot_stride = 1000;
  } else {
    std::string known;
    for (const auto& k : scenario_preset_names()) known += " " + k;
    throw std::runtime_error("scenario: unknown preset \"" + name + "\"; known presets:" + known);
  }
  return s;
}

std::vector<std::string> scenario_preset_names() {
  return {"stable_extension_r2", "split_1_-1", "split_2_0", "unstable_extension_r2"};
}

std::uint64_t scenario_hash(const Scenario& s) {
  const std::string text = scenario_to_json(s).dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

TorusGeometry make_geometry(const Scenario& s) {
  return TorusGeometry(s.n, s.periods.empty()
                                ? std::vector<double>(static_cast<size_t>(s.n), 1.0)
                                : s.periods,
                       s.grid);
}

Bundle make_bundle(const Scenario& s, const TorusGeometry& g) {
  BlockStructure blocks{s.block_ranks, s.degrees};
  const std::vector<int> idx_deg = blocks.index_degrees();
  TwistedForm a;

  if (!s.a_files.empty()) {
    if (static_cast<int>(s.a_files.size()) != g.n())
      throw std::runtime_error("scenario: \"bundle.a_files\" needs one file per dz̄ component");
    for (const auto& path : s.a_files) a.push_back(read_field(path, g));
  } else if (s.a_preset == "direct_sum") {
    // zero deformation: leave `a` empty
  } else if (s.a_preset == "extension" || s.a_preset == "random_smooth") {
    SplitMix64 rng{s.seed};
    for (int k = 0; k < g.n(); ++k) {
      TwistedField comp = random_field(g, idx_deg, idx_deg, s.band, s.amplitude, rng);
      if (s.a_preset == "extension") {
        // keep only the strictly upper triangle: the deformation maps the
        // quotient line into the sub-line, defining an extension
        for (long p = 0; p < g.points(); ++p)
          for (int i = 0; i < comp.rows(); ++i)
            for (int jj = 0; jj <= i; ++jj) comp[p](i, jj) = cplx(0.0, 0.0);
      }
      a.push_back(std::move(comp));
    }
  } else {
    throw std::runtime_error("scenario: unknown a_preset \"" + s.a_preset +
                             "\"; known: direct_sum extension random_smooth");
  }
  return Bundle(g, std::move(blocks), std::move(a));
}

}  // namespace hef
