#ifndef DOENG_VALUE_HPP
#define DOENG_VALUE_HPP

#include "doeng/rational.hpp"

#include <string>
#include <variant>
#include <vector>

namespace doeng {

// One element of a finite domain: an exact rational or a symbolic label.
class Value {
public:
  Value() : v_(Rat(0)) {}
  explicit Value(Rat r) : v_(std::move(r)) {}
  explicit Value(long long i) : v_(Rat(i)) {}
  explicit Value(std::string label) : v_(std::move(label)) {}

  static Value rat(long long num, long long den = 1) { return Value(Rat(num, den)); }
  static Value label(std::string s) { return Value(std::move(s)); }

  bool is_rat() const { return std::holds_alternative<Rat>(v_); }
  bool is_label() const { return !is_rat(); }
  const Rat& as_rat() const { return std::get<Rat>(v_); }
  const std::string& as_label() const { return std::get<std::string>(v_); }

  bool operator==(const Value& o) const { return v_ == o.v_; }
  bool operator!=(const Value& o) const { return !(*this == o); }

  // Only used for deterministic container keys; domain order is what tie-break
  // rules consult.
  bool operator<(const Value& o) const {
    if (is_rat() != o.is_rat()) return is_rat();
    if (is_rat()) return as_rat() < o.as_rat();
    return as_label() < o.as_label();
  }

  std::string str() const {
    if (is_rat()) return rat_to_string(as_rat());
    return as_label();
  }

private:
  std::variant<Rat, std::string> v_;
};

using Domain = std::vector<Value>;

inline bool domain_is_binary01(const Domain& d) {
  if (d.size() != 2) return false;
  const Value zero = Value::rat(0), one = Value::rat(1);
  return (d[0] == zero && d[1] == one) || (d[0] == one && d[1] == zero);
}

inline bool value_is_bool(const Value& v) {
  return v.is_rat() && (v.as_rat() == 0 || v.as_rat() == 1);
}

} // namespace doeng

#endif
