#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mbnf/analysis.hpp"
#include "mbnf/dynamics.hpp"
#include "mbnf/errors.hpp"
#include "mbnf/invariants.hpp"
#include "mbnf/polynomial_io.hpp"

namespace mbnf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSummationNote =
    "coefficients are accumulated in a fixed term order; reruns of the same build give identical files";

struct Context {
  RunConfig cfg;
  PotentialSpec v;
  std::string hash;
  fs::path out;
};

void warn(const std::string& name, const std::string& message) {
  std::cerr << "warning: " << name << ": " << message << "\n";
}

void warn(const std::vector<Warning>& ws) {
  for (const auto& w : ws) warn(w.name, w.message);
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

json header(const Context& ctx) {
  return json{{"schema", kSchema}, {"config_hash", ctx.hash}, {"note", kSummationNote}};
}

void write_json(const fs::path& path, json body, const Context& ctx) {
  json doc = header(ctx);
  for (auto& [k, v] : body.items()) doc[k] = v;
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << doc.dump(2) << "\n";
}

std::ofstream open_csv(const fs::path& path, const Context& ctx, const std::string& columns) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << "# schema=" << kSchema << " config_hash=" << ctx.hash << "\n" << columns << "\n";
  os << std::setprecision(17);
  return os;
}

json to_json(const ResonanceSpec& r) {
  return {{"m1", r.m1}, {"m2", r.m2}, {"I1_star", r.I1_star}, {"omega1_star", r.omega1_star},
          {"omega2_star", r.omega2_star}};
}

json state_meta(const NormalizationState& s) {
  return {{"mode", s.mode == Mode::resonant ? "res" : "nonres"},
          {"order", s.step},
          {"trunc", s.trunc_order},
          {"omega10", s.omega10},
          {"resonance", s.resonance ? to_json(*s.resonance) : json(nullptr)}};
}

std::vector<std::array<double, 2>> read_seeds(const std::string& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot read seed file " + file);
  std::vector<std::array<double, 2>> seeds;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    for (char& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ls(line);
    double z, pz;
    if (!(ls >> z)) continue;
    std::string rest;
    if (!(ls >> pz) || (ls >> rest)) throw ParseError("expected 'z pz'", n, 1);
    seeds.push_back({z, pz});
  }
  return seeds;
}

IntegratorConfig integrator(const RunConfig& c) {
  IntegratorConfig ic;
  ic.tol = c.tol;
  return ic;
}

// Bifurcation data for the resonant preparation.
BifurcationResult resonance_point(const Context& ctx, int m1, int m2) {
  const int r = ctx.cfg.bifurcation_order;
  const auto s = normalize(complexify_nonresonant(ctx.v, r), r, r);
  auto b = bifurcation_energy(s, m1, m2, critical_energy(ctx.v));
  warn(b.warnings);
  return b;
}

PreparedHamiltonian prepare(const Context& ctx, int trunc) {
  if (ctx.cfg.mode == "nonres") return complexify_nonresonant(ctx.v, trunc);
  return prepare_resonant(ctx.v, resonance_point(ctx, ctx.cfg.m1, ctx.cfg.m2).resonance(), trunc);
}

void cmd_normalize(const Context& ctx) {
  const int order = ctx.cfg.order.value_or(kDefaultNormalizationOrder);
  const int trunc = ctx.cfg.trunc.value_or(order + 5);
  if (order > trunc) throw OrderOverflowError("--order exceeds --trunc");
  const auto state = normalize(prepare(ctx, trunc), order, trunc);

  json nf = state_meta(state);
  nf["terms"] = to_json(state.normal_form());
  if (state.mode == Mode::nonresonant) {
    nf["omega2_squared"] = extract_omega2_squared(state);
    nf["action_series"] = action_series(state);
  }
  nf["homological_residuals"] = state.homological_residuals;
  nf["kernel_leaks"] = state.kernel_leaks;
  write_json(ctx.out / "normalform.json", nf, ctx);

  json gens = state_meta(state);
  gens["generators"] = json::array();
  for (std::size_t s = 0; s < state.generators.size(); ++s)
    gens["generators"].push_back({{"order", s + 1}, {"terms", to_json(state.generators[s])}});
  write_json(ctx.out / "generators.json", gens, ctx);

  json rem = state_meta(state);
  rem["terms"] = to_json(state.remainder());
  write_json(ctx.out / "remainder.json", rem, ctx);
}

NormalizationState load_state(const fs::path& dir) {
  std::ifstream is(dir / "generators.json");
  if (!is) throw ConfigError("no generators.json in " + dir.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw SerializationError(std::string("generators.json: ") + e.what());
  }
  NormalizationState s;
  s.step = j.at("order").get<int>();
  s.trunc_order = j.at("trunc").get<int>();
  s.omega10 = j.at("omega10").get<double>();
  if (j.at("mode") == "res") {
    const auto& r = j.at("resonance");
    s.mode = Mode::resonant;
    s.resonance = ResonanceSpec{r.at("m1"), r.at("m2"), r.at("I1_star"), r.at("omega1_star"), r.at("omega2_star")};
    s.kernel = KernelSet::resonant(s.resonance->m1, s.resonance->m2);
  }
  for (const auto& g : j.at("generators")) s.generators.push_back(polynomial_from_json(g.at("terms"), s.trunc_order));
  if (int(s.generators.size()) != s.step) throw SerializationError("generators.json: generator count does not match order");
  return s;
}

json monodromy_json(const MonodromyResult& m) {
  return {{"E", m.E},
          {"T", m.period},
          {"trace", m.trace},
          {"trace_half", m.trace_half},
          {"stable", m.stable},
          {"rotation_number", std::isnan(m.rotation_number) ? json(nullptr) : json(m.rotation_number)},
          {"M", m.M}};
}

void cmd_section(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double E = c.energy.value_or(0.1);
  std::vector<std::array<double, 2>> seeds;
  if (c.seed_file.empty())
    warn("NoSeedsWarning", "no --seed-file given; only the level grid is written");
  else if ((seeds = read_seeds(c.seed_file)).empty())
    warn("NoSeedsWarning", "seed file " + c.seed_file + " is empty; no orbits integrated");

  NormalizationState state;
  if (!c.from_dir.empty()) {
    state = load_state(c.from_dir);
  } else {
    const int order = c.order.value_or(5);
    const int trunc = c.trunc.value_or(order);
    if (order > trunc) throw OrderOverflowError("--order exceeds --trunc");
    state = normalize(prepare(ctx, trunc), order, trunc);
  }
  const auto phi = back_transform(state);
  SectionFunction f(phi, ctx.v, E);
  GridSpec grid;
  grid.nz = c.grid_nz;
  grid.npz = c.grid_npz;
  grid.z_min = c.z_min;
  grid.z_max = c.z_max;
  const auto levels = section_levels(f, grid, seeds, c.threads);

  const fs::path dir = ctx.out / "sections";
  {
    auto os = open_csv(dir / ("levels_E" + fmt(E) + "_r" + std::to_string(state.step) + ".csv"), ctx, "z,pz,phi,valid");
    const auto& g = levels.grid;
    for (int j = 0; j < g.npz; ++j)
      for (int i = 0; i < g.nz; ++i) {
        os << g.z[i] << "," << g.p_z[j] << ",";
        if (g.is_valid(i, j))
          os << g.at(i, j) << ",1\n";
        else
          os << "nan,0\n";
      }
  }
  json lv = state_meta(state);
  lv["E"] = E;
  lv["seeds"] = json::array();
  for (std::size_t k = 0; k < levels.seeds.size(); ++k) {
    SectionLevels one{levels.grid, {levels.seeds[k]}};
    lv["seeds"].push_back({{"seed_id", k},
                           {"z", levels.seeds[k].z},
                           {"pz", levels.seeds[k].p_z},
                           {"I_ct", levels.seeds[k].level},
                           {"islands", count_islands(one).size()}});
  }
  lv["islands"] = json::array();
  if (!seeds.empty())
    for (const auto& is : count_islands(levels))
      lv["islands"].push_back({{"z", is.z}, {"pz", is.p_z}, {"cells", is.cells}});
  write_json(dir / "levels.json", lv, ctx);

  if (!seeds.empty()) {
    const auto set = poincare_section(ctx.v, seeds, E, c.n_crossings, integrator(c), c.threads);
    auto os = open_csv(dir / ("numeric_E" + fmt(E) + ".csv"), ctx, "z,pz,seed_id");
    for (const auto& x : set.crossings) os << x.z << "," << x.p_z << "," << x.seed_id << "\n";
  }

  if (E < critical_energy(ctx.v))
    write_json(ctx.out / "monodromy.json", monodromy_json(central_orbit_monodromy(ctx.v, E, integrator(c))), ctx);
}

void cmd_asymptotics(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double E = c.energy.value_or(0.2);
  const int r_max = c.order.value_or(19);
  const int trunc = c.trunc.value_or(r_max + 1);
  if (r_max >= trunc) throw OrderOverflowError("asymptotics needs --order < --trunc");
  const auto grid = c.delta_E.empty() ? log_grid(c.delta_E_min, c.delta_E_max, c.delta_E_per_decade) : c.delta_E;
  for (double d : grid)
    if (!(d < E)) throw ConfigError("every delta_E must be below the energy " + fmt(E));

  FitConfig fc;
  fc.power_law_max_dE = c.power_law_max_dE;
  fc.exponential_max_dE = c.exponential_max_dE;
  const auto scan = optimal_order_scan(prepare(ctx, trunc), r_max, trunc, E, c.beta, grid, fc);
  warn(scan.fit.warnings);

  {
    auto os = open_csv(ctx.out / "asymptotics.csv", ctx, "mode,E,beta,deltaE,r,N,norm");
    for (const auto& row : scan.rows)
      os << c.mode << "," << E << "," << c.beta << "," << row.delta_E << "," << row.r << "," << row.N << ","
         << row.norm << "\n";
  }

  const auto& f = scan.fit;
  json fits{{"mode", c.mode}, {"E", E}, {"beta", c.beta}, {"N", trunc}};
  fits["ranges"] = {{"power_law_max_dE", fc.power_law_max_dE}, {"exponential_max_dE", fc.exponential_max_dE}};
  fits["r_opt"] = json::array();
  for (std::size_t i = 0; i < f.delta_E.size(); ++i)
    fits["r_opt"].push_back({{"deltaE", f.delta_E[i]}, {"r_opt", f.r_opt[i]}, {"norm", f.optimal_norm[i]}});
  auto num = [](const std::optional<double>& x) { return x ? json(*x) : json(nullptr); };
  if (grid.size() < 2) {
    std::cerr << "notice: a single delta_E value gives one curve; fits are skipped\n";
    fits["alpha"] = fits["d"] = fits["deltaE0"] = nullptr;
    fits["residuals"] = nullptr;
  } else {
    fits["alpha"] = num(f.alpha);
    fits["d"] = num(f.d);
    fits["deltaE0"] = num(f.delta_E0);
    fits["residuals"] = {{"power_law", {{"rms", f.power_law.rms_residual}, {"points", f.power_law.points}}},
                         {"exponential", {{"rms", f.exponential.rms_residual}, {"points", f.exponential.points}}}};
  }
  fits["warnings"] = json::array();
  for (const auto& w : f.warnings) fits["warnings"].push_back({{"name", w.name}, {"message", w.message}});
  write_json(ctx.out / "fits.json", fits, ctx);
}

std::pair<int, int> parse_resonance(const std::string& s) {
  const auto colon = s.find(':');
  try {
    if (colon == std::string::npos) throw std::invalid_argument(s);
    std::size_t a = 0, b = 0;
    const int m1 = std::stoi(s.substr(0, colon), &a), m2 = std::stoi(s.substr(colon + 1), &b);
    if (a != colon || b != s.size() - colon - 1 || m1 <= 0 || m2 <= 0) throw std::invalid_argument(s);
    return {m1, m2};
  } catch (const std::exception&) {
    throw ConfigError("resonance '" + s + "' is not of the form m1:m2 with positive integers");
  }
}

void cmd_bifurcation(const Context& ctx) {
  const auto& c = ctx.cfg;
  const int r = c.order.value_or(8);
  const double ec = critical_energy(ctx.v);
  std::vector<std::pair<int, int>> list;
  for (const auto& s : c.resonances) list.push_back(parse_resonance(s));
  const auto state = normalize(complexify_nonresonant(ctx.v, r), r, r);
  json out{{"order", r}, {"E_crit", ec}, {"resonances", json::array()}};
  for (auto [m1, m2] : list) {
    const auto b = bifurcation_energy(state, m1, m2, ec);
    warn(b.warnings);
    json e = to_json(b.resonance());
    e["energy"] = b.energy;
    e["numeric_energy"] = c.numeric ? json(numerical_bifurcation_energy(ctx.v, m1, m2, integrator(c))) : json(nullptr);
    out["resonances"].push_back(e);
  }
  write_json(ctx.out / "bifurcations.json", out, ctx);
}

void cmd_chaos_threshold(const Context& ctx) {
  const auto& c = ctx.cfg;
  const double ec = critical_energy(ctx.v);
  double numeric = std::nan("");
  if (c.numeric) {
    numeric = numerical_chaos_threshold(ctx.v, integrator(c));
    write_json(ctx.out / "monodromy.json", monodromy_json(central_orbit_monodromy(ctx.v, numeric, integrator(c))), ctx);
  }
  const auto rows = chaos_threshold_convergence(complexify_nonresonant(ctx.v, c.r_hi), c.r_lo, c.r_hi, ec, numeric);
  json out{{"numeric_E_t", c.numeric ? json(numeric) : json(nullptr)}, {"table", json::array()}};
  for (const auto& row : rows)
    out["table"].push_back(
        {{"r", row.r}, {"E_t", row.energy}, {"error", c.numeric ? json(row.error) : json(nullptr)}});
  write_json(ctx.out / "threshold.json", out, ctx);
}

PotentialSpec load_potential(RunConfig& c) {
  if (!c.potential.empty()) return parse_potential(c.potential);
  if (c.potential_file.empty()) return build_builtin_model();
  std::ifstream is(c.potential_file);
  if (!is) throw ConfigError("cannot read potential file " + c.potential_file);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_potential(ss.str());
}

}  // namespace

void run(RunConfig cfg) {
  validate(cfg);
  Context ctx;
  ctx.v = load_potential(cfg);
  cfg.potential = print_potential(ctx.v);
  ctx.cfg = cfg;
  ctx.hash = config_hash(cfg);
  ctx.out = cfg.out;
  fs::create_directories(ctx.out);
  write_json(ctx.out / "run_config.json", json{{"config", to_json(cfg)}}, ctx);

  if (cfg.command == "normalize")
    cmd_normalize(ctx);
  else if (cfg.command == "section")
    cmd_section(ctx);
  else if (cfg.command == "asymptotics")
    cmd_asymptotics(ctx);
  else if (cfg.command == "bifurcation")
    cmd_bifurcation(ctx);
  else if (cfg.command == "chaos-threshold")
    cmd_chaos_threshold(ctx);
  else
    throw ConfigError("unknown command '" + cfg.command + "'");
}

}  // namespace mbnf::cli
