#include <CLI11.hpp>
#include <algorithm>
#include <fstream>
#include <iostream>

#include "commands.hpp"
#include "mbnf/errors.hpp"

using namespace mbnf;
using namespace mbnf::cli;

namespace {

struct Bound {
  CLI::Option* option;
  std::string key;
};

void load_config_file(RunConfig& cfg, const std::string& path, const std::vector<std::string>& keep) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  merge_json(cfg, j.contains("config") ? j.at("config") : j, keep);
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  std::vector<Bound> bound;
  std::string config_file;

  CLI::App app{"Birkhoff normal forms, formal integrals and surfaces of section for the magnetic bottle."};
  app.require_subcommand(0, 1);
  app.fallthrough();
  auto bind = [&](CLI::Option* o, const std::string& key) {
    bound.push_back({o, key});
    return o;
  };
  bind(app.add_option("--out", cfg.out, "output directory")->capture_default_str(), "out");
  bind(app.add_option("--potential", cfg.potential_file, "potential file (default: builtin model)"), "potential_file");
  bind(app.add_option("--threads", cfg.threads, "worker threads for seed batches and grids")->capture_default_str(),
       "threads");
  bind(app.add_option("--seed-file", cfg.seed_file, "seeds, one 'z pz' pair per line"), "seed_file");
  app.add_option("--config", config_file, "rerun from a run_config.json; explicit flags override it");

  auto add_mode = [&](CLI::App* sub) {
    bind(sub->add_option("--mode", cfg.mode, "nonres or res")->capture_default_str(), "mode");
    bind(sub->add_option("--m1", cfg.m1, "resonance m1 (omega2/omega1 = m2/m1)")->capture_default_str(), "m1");
    bind(sub->add_option("--m2", cfg.m2, "resonance m2")->capture_default_str(), "m2");
    bind(sub->add_option("--bifurcation-order", cfg.bifurcation_order,
                         "normal-form order locating I1* for the resonant preparation")
             ->capture_default_str(),
         "bifurcation_order");
  };
  auto add_orders = [&](CLI::App* sub, const std::string& order_help, const std::string& trunc_help) {
    bind(sub->add_option_function<int>("--order", [&](int v) { cfg.order = v; }, order_help), "order");
    if (!trunc_help.empty())
      bind(sub->add_option_function<int>("--trunc", [&](int v) { cfg.trunc = v; }, trunc_help), "trunc");
  };
  auto add_energy = [&](CLI::App* sub, const std::string& help) {
    bind(sub->add_option_function<double>("--energy,-E", [&](double v) { cfg.energy = v; }, help), "energy");
  };
  auto add_tol = [&](CLI::App* sub) {
    bind(sub->add_option("--tol", cfg.tol, "integrator tolerance (relative energy drift target)")->capture_default_str(),
         "tol");
  };

  auto* normalize = app.add_subcommand("normalize", "normal form, generators and remainder");
  add_mode(normalize);
  add_orders(normalize, "normalization order r (default 15)", "book-keeping truncation (default order + 5)");

  auto* section = app.add_subcommand("section", "numerical crossings and formal-integral levels on rho = 0");
  add_mode(section);
  add_orders(section, "normalization order r (default 5)", "book-keeping truncation (default order)");
  add_energy(section, "energy (default 0.1)");
  add_tol(section);
  bind(section->add_option("--crossings", cfg.n_crossings, "crossings per seed")->capture_default_str(), "n_crossings");
  bind(section->add_option("--nz", cfg.grid_nz, "grid points along z")->capture_default_str(), "grid_nz");
  bind(section->add_option("--npz", cfg.grid_npz, "grid points along p_z")->capture_default_str(), "grid_npz");
  bind(section->add_option("--z-min", cfg.z_min, "grid z range")->capture_default_str(), "z_min");
  bind(section->add_option("--z-max", cfg.z_max, "grid z range")->capture_default_str(), "z_max");
  bind(section->add_option("--from", cfg.from_dir, "reuse generators.json from a normalize run"), "from");

  auto* asymptotics = app.add_subcommand("asymptotics", "remainder norms, optimal order and fits");
  add_mode(asymptotics);
  add_orders(asymptotics, "largest normalization order r_max (default 19)", "norm order N = truncation (default order + 1)");
  add_energy(asymptotics, "energy (default 0.2)");
  bind(asymptotics->add_option("--beta", cfg.beta, "direction beta")->capture_default_str(), "beta");
  bind(asymptotics->add_option("--delta-e", cfg.delta_E, "explicit delta_E values (overrides the log grid)")->delimiter(','),
       "delta_E");
  bind(asymptotics->add_option("--de-min", cfg.delta_E_min, "log grid start")->capture_default_str(), "delta_E_min");
  bind(asymptotics->add_option("--de-max", cfg.delta_E_max, "log grid end")->capture_default_str(), "delta_E_max");
  bind(asymptotics->add_option("--de-per-decade", cfg.delta_E_per_decade, "log grid density")->capture_default_str(),
       "delta_E_per_decade");
  bind(asymptotics->add_option("--power-law-max-de", cfg.power_law_max_dE, "power-law fit range")->capture_default_str(),
       "power_law_max_dE");
  bind(asymptotics->add_option("--exp-max-de", cfg.exponential_max_dE, "exponential fit range")->capture_default_str(),
       "exponential_max_dE");

  auto* bifurcation = app.add_subcommand("bifurcation", "energies where omega2/omega1 = m2/m1");
  add_orders(bifurcation, "normal-form order (default 8)", "");
  add_tol(bifurcation);
  bind(bifurcation->add_option("--resonances", cfg.resonances, "m1:m2 list")->delimiter(',')->capture_default_str(),
       "resonances");
  bind(bifurcation->add_option("--numeric", cfg.numeric, "also solve with the monodromy eigenphase")->capture_default_str(),
       "numeric");

  auto* chaos = app.add_subcommand("chaos-threshold", "stability loss of the central orbit, numeric and E_t(r)");
  add_tol(chaos);
  bind(chaos->add_option("--r-lo", cfg.r_lo, "first order of the table")->capture_default_str(), "r_lo");
  bind(chaos->add_option("--r-hi", cfg.r_hi, "last order of the table")->capture_default_str(), "r_hi");
  bind(chaos->add_option("--numeric", cfg.numeric, "monodromy bisection")->capture_default_str(), "numeric");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto* sub : app.get_subcommands()) cfg.command = sub->get_name();
    if (!config_file.empty()) {
      std::vector<std::string> keep;
      for (const auto& b : bound)
        if (b.option->count() > 0) keep.push_back(b.key);
      if (!cfg.command.empty()) keep.push_back("command");
      load_config_file(cfg, config_file, keep);
      if (std::find(keep.begin(), keep.end(), "potential_file") != keep.end()) cfg.potential.clear();
    }
    if (cfg.command.empty()) throw ConfigError("a subcommand is required (see --help)");
    run(cfg);
  } catch (const ConfigError& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.name() << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "Error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
