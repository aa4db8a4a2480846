#ifndef DOENG_TESTS_FIXTURES_HPP
#define DOENG_TESTS_FIXTURES_HPP

#include "doeng/dsl.hpp"
#include "doeng/scm.hpp"

#include <fstream>
#include <sstream>
#include <string>

#ifndef DOENG_FIXTURES
#error "DOENG_FIXTURES must point at the fixtures directory"
#endif

namespace fixtures {

inline std::string read(const std::string& name) {
  const std::string path = std::string(DOENG_FIXTURES) + "/" + name;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline doeng::Scm load(const std::string& name) {
  return doeng::parse_model(read(name));
}

inline doeng::Scm m1() { return load("m1.scm"); }
inline doeng::Scm m1b() { return load("m1b.scm"); }
inline doeng::Scm m2() { return load("m2.scm"); }
inline doeng::Scm m3() { return load("m3.scm"); }
inline doeng::Scm version_gap() { return load("version_gap.scm"); }
inline doeng::Scm version_nogap() { return load("version_nogap.scm"); }

} // namespace fixtures

#endif
