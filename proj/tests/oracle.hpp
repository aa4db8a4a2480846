#ifndef DOENG_TESTS_ORACLE_HPP
#define DOENG_TESTS_ORACLE_HPP

// Test-only brute-force oracle. Independent of the engine's realization and
// enumeration code paths: each test hand-writes the structural equations and
// intervention semantics as plain lambdas, and this header only multiplies
// declared table probabilities over a recursive enumeration.

#include "doeng/rational.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using doeng::Rat;
using Assign = std::map<std::string, int>;

struct ExoVar {
  std::string name;
  int card;
  // P(name = value | earlier exogenous values)
  std::function<Rat(const Assign&, int)> prob;
};

inline ExoVar coin(const std::string& name, const Rat& p1) {
  return {name, 2, [p1](const Assign&, int v) { return v == 1 ? p1 : Rat(1) - p1; }};
}

inline ExoVar table3(const std::string& name, const Rat& p0, const Rat& p1, const Rat& p2) {
  return {name, 3, [p0, p1, p2](const Assign&, int v) {
            return v == 0 ? p0 : (v == 1 ? p1 : p2);
          }};
}

// Enumerates every exogenous configuration, applies the hand-written
// mechanism, and accumulates the mass of configurations satisfying `event`.
inline Rat probability(const std::vector<ExoVar>& exo,
                       const std::function<void(Assign&)>& mechanism,
                       const std::function<bool(const Assign&)>& event) {
  Rat total(0);
  Assign a;
  std::function<void(size_t, Rat)> rec = [&](size_t i, Rat p) {
    if (p == 0) return;
    if (i == exo.size()) {
      Assign world = a;
      mechanism(world);
      if (event(world)) total += p;
      return;
    }
    for (int v = 0; v < exo[i].card; ++v) {
      a[exo[i].name] = v;
      rec(i + 1, p * exo[i].prob(a, v));
    }
    a.erase(exo[i].name);
  };
  rec(0, Rat(1));
  return total;
}

inline Rat conditional(const std::vector<ExoVar>& exo,
                       const std::function<void(Assign&)>& mechanism,
                       const std::function<bool(const Assign&)>& event,
                       const std::function<bool(const Assign&)>& given) {
  const Rat joint = probability(exo, mechanism, [&](const Assign& a) {
    return event(a) && given(a);
  });
  const Rat denom = probability(exo, mechanism, given);
  return joint / denom;
}

inline Rat expectation(const std::vector<ExoVar>& exo,
                       const std::function<void(Assign&)>& mechanism,
                       const std::function<Rat(const Assign&)>& value) {
  Rat total(0);
  Assign a;
  std::function<void(size_t, Rat)> rec = [&](size_t i, Rat p) {
    if (p == 0) return;
    if (i == exo.size()) {
      Assign world = a;
      mechanism(world);
      total += p * value(world);
      return;
    }
    for (int v = 0; v < exo[i].card; ++v) {
      a[exo[i].name] = v;
      rec(i + 1, p * exo[i].prob(a, v));
    }
    a.erase(exo[i].name);
  };
  rec(0, Rat(1));
  return total;
}

} // namespace oracle

#endif
