#include "mbnf/polynomial_io.hpp"

#include "mbnf/errors.hpp"

namespace mbnf {

nlohmann::json to_json(const Polynomial& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& t : p.terms()) {
    arr.push_back({{"k1", t.key.k1},
                   {"l1", t.key.l1},
                   {"k2", t.key.k2},
                   {"l2", t.key.l2},
                   {"re", t.coeff.real()},
                   {"im", t.coeff.imag()},
                   {"bk", t.bk}});
  }
  return arr;
}

Polynomial polynomial_from_json(const nlohmann::json& j, int trunc_order) {
  if (!j.is_array()) throw SerializationError("polynomial JSON must be an array of terms");
  Polynomial p(trunc_order);
  try {
    for (const auto& rec : j) {
      p.accumulate(make_key(rec.at("k1").get<int>(), rec.at("l1").get<int>(), rec.at("k2").get<int>(),
                            rec.at("l2").get<int>()),
                   rec.at("bk").get<int>(), {rec.at("re").get<double>(), rec.at("im").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw SerializationError(std::string("malformed polynomial record: ") + e.what());
  }
  p.prune();
  return p;
}

}  // namespace mbnf
