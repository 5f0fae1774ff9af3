#include "run_config.hpp"

#include <cstdint>
#include <cstdio>

#include "mbnf/errors.hpp"

namespace mbnf::cli {

using nlohmann::json;

namespace {

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <class T>
void read(const json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

template <class T>
void read(const json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null())
    field.reset();
  else
    field = j.at(key).get<T>();
}

}  // namespace

json to_json(const RunConfig& c) {
  return json{{"command", c.command},
              {"potential_file", c.potential_file},
              {"potential", c.potential},
              {"mode", c.mode},
              {"m1", c.m1},
              {"m2", c.m2},
              {"order", opt(c.order)},
              {"trunc", opt(c.trunc)},
              {"bifurcation_order", c.bifurcation_order},
              {"energy", opt(c.energy)},
              {"beta", c.beta},
              {"delta_E", c.delta_E},
              {"delta_E_min", c.delta_E_min},
              {"delta_E_max", c.delta_E_max},
              {"delta_E_per_decade", c.delta_E_per_decade},
              {"power_law_max_dE", c.power_law_max_dE},
              {"exponential_max_dE", c.exponential_max_dE},
              {"seed_file", c.seed_file},
              {"n_crossings", c.n_crossings},
              {"grid_nz", c.grid_nz},
              {"grid_npz", c.grid_npz},
              {"z_min", c.z_min},
              {"z_max", c.z_max},
              {"from", c.from_dir},
              {"resonances", c.resonances},
              {"numeric", c.numeric},
              {"r_lo", c.r_lo},
              {"r_hi", c.r_hi},
              {"tol", c.tol},
              {"out", c.out},
              {"threads", c.threads}};
}

void merge_json(RunConfig& c, const json& j, const std::vector<std::string>& keep) {
  if (!j.is_object()) throw ConfigError("run configuration must be a JSON object");
  const json known = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
  json src = j;
  for (const auto& k : keep) src.erase(k);
  try {
    read(src, "command", c.command);
    read(src, "potential_file", c.potential_file);
    read(src, "potential", c.potential);
    read(src, "mode", c.mode);
    read(src, "m1", c.m1);
    read(src, "m2", c.m2);
    read(src, "order", c.order);
    read(src, "trunc", c.trunc);
    read(src, "bifurcation_order", c.bifurcation_order);
    read(src, "energy", c.energy);
    read(src, "beta", c.beta);
    read(src, "delta_E", c.delta_E);
    read(src, "delta_E_min", c.delta_E_min);
    read(src, "delta_E_max", c.delta_E_max);
    read(src, "delta_E_per_decade", c.delta_E_per_decade);
    read(src, "power_law_max_dE", c.power_law_max_dE);
    read(src, "exponential_max_dE", c.exponential_max_dE);
    read(src, "seed_file", c.seed_file);
    read(src, "n_crossings", c.n_crossings);
    read(src, "grid_nz", c.grid_nz);
    read(src, "grid_npz", c.grid_npz);
    read(src, "z_min", c.z_min);
    read(src, "z_max", c.z_max);
    read(src, "from", c.from_dir);
    read(src, "resonances", c.resonances);
    read(src, "numeric", c.numeric);
    read(src, "r_lo", c.r_lo);
    read(src, "r_hi", c.r_hi);
    read(src, "tol", c.tol);
    read(src, "out", c.out);
    read(src, "threads", c.threads);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value in run configuration: ") + e.what());
  }
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (c.mode != "nonres" && c.mode != "res") fail("--mode must be nonres or res");
  if (c.m1 <= 0 || c.m2 <= 0) fail("--m1 and --m2 must be positive");
  if (c.order && *c.order < 0) fail("--order must be >= 0");
  if (c.trunc && *c.trunc < 0) fail("--trunc must be >= 0");
  if (c.trunc && *c.trunc > 60) fail("--trunc above 60 is not supported");
  if (c.bifurcation_order < 2) fail("--bifurcation-order must be >= 2");
  if (c.energy && !(*c.energy > 0)) fail("--energy must be positive");
  if (!(c.delta_E_min > 0 && c.delta_E_max >= c.delta_E_min)) fail("need 0 < --de-min <= --de-max");
  if (c.delta_E_per_decade <= 0) fail("--de-per-decade must be positive");
  for (double d : c.delta_E)
    if (!(d >= 0)) fail("--delta-e values must be >= 0");
  if (c.n_crossings < 0) fail("--crossings must be >= 0");
  if (c.grid_nz < 2 || c.grid_npz < 2) fail("--grid needs at least 2 points per axis");
  if (!(c.z_max > c.z_min)) fail("need --z-min < --z-max");
  if (c.r_lo < 2 || c.r_hi < c.r_lo) fail("need 2 <= --r-lo <= --r-hi");
  if (!(c.tol > 0 && c.tol < 1e-3)) fail("--tol must lie in (0, 1e-3)");
  if (c.threads < 1) fail("--threads must be >= 1");
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  j.erase("out");
  j.erase("threads");
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mbnf::cli
