#ifndef DOENG_RATIONAL_HPP
#define DOENG_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

namespace doeng {

// All probabilities and expectations are exact rationals; equality checks in
// the identity suite carry zero tolerance.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string rat_to_string(const Rat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline double rat_to_double(const Rat& r) { return r.convert_to<double>(); }

} // namespace doeng

#endif
