#pragma once

#include <json.hpp>

#include "mbnf/polynomial.hpp"

namespace mbnf {

/// Array of {"k1","l1","k2","l2","re","im","bk"} records ordered by exponent
/// key, then book-keeping order.
nlohmann::json to_json(const Polynomial& p);
Polynomial polynomial_from_json(const nlohmann::json& j, int trunc_order = kDefaultTruncOrder);

}  // namespace mbnf
