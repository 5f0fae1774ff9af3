#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

namespace mbnf::cli {

inline constexpr const char* kSchema = "mbnf-run/1";

struct RunConfig {
  std::string command;

  std::string potential_file;  // empty: builtin model
  std::string potential;       // printed model, filled in before the run

  std::string mode = "nonres";
  int m1 = 2, m2 = 1;
  std::optional<int> order;  // per-command default when unset
  std::optional<int> trunc;  // order + 5 when unset
  int bifurcation_order = 8;

  std::optional<double> energy;  // per-command default when unset
  double beta = 0.0;
  std::vector<double> delta_E;  // explicit grid; overrides the log grid
  double delta_E_min = 1e-5, delta_E_max = 1e-1;
  int delta_E_per_decade = 5;
  double power_law_max_dE = 1e-3;
  double exponential_max_dE = 1e-3;

  std::string seed_file;
  int n_crossings = 500;
  int grid_nz = 400, grid_npz = 400;
  double z_min = -1.5, z_max = 1.5;
  std::string from_dir;

  std::vector<std::string> resonances{"4:1", "3:1", "2:1", "1:1"};
  bool numeric = true;
  int r_lo = 10, r_hi = 30;

  double tol = 1e-12;

  // Not part of the hashed configuration.
  std::string out = "out";
  int threads = 1;
};

nlohmann::json to_json(const RunConfig& c);
/// Fills the fields present in j; unknown keys raise ConfigError.
void merge_json(RunConfig& c, const nlohmann::json& j, const std::vector<std::string>& keep);

/// Checks ranges and combinations; throws ConfigError.
void validate(const RunConfig& c);

/// Stable 64-bit FNV-1a of the canonical config JSON (out and threads excluded), in hex.
std::string config_hash(const RunConfig& c);

}  // namespace mbnf::cli
