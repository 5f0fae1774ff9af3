#pragma once

#include "run_config.hpp"

namespace mbnf::cli {

/// Runs cfg.command; files go under cfg.out.
void run(RunConfig cfg);

}  // namespace mbnf::cli
