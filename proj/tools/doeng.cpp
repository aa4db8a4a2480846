#include "doeng/dsl.hpp"
#include "doeng/identities.hpp"
#include "doeng/inference.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace doeng;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrKind::Io, "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::int64_t support_cap() {
  if (const char* env = std::getenv("DOENG_SUPPORT_CAP")) {
    try {
      const long long v = std::stoll(env);
      if (v > 0) return v;
    } catch (...) {
    }
    std::cerr << "warning: ignoring invalid DOENG_SUPPORT_CAP\n";
  }
  return kDefaultSupportCap;
}

struct Output {
  std::string path; // empty = stdout
  std::ostringstream buf;
  template <typename T> Output& operator<<(const T& v) {
    buf << v;
    return *this;
  }
  void flush() {
    if (path.empty()) {
      std::cout << buf.str();
    } else {
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrKind::Io, "cannot write '" + path + "'");
      out << buf.str();
    }
  }
};

Event to_event(const EventAtoms& atoms) {
  Event e;
  e.atoms = atoms;
  return e;
}

Collection to_collection(const std::vector<std::pair<std::vector<Value>, Value>>& rows) {
  Collection c;
  for (const auto& [key, val] : rows) c.entries.emplace_back(key, std::vector<Value>{val});
  return c;
}

int run_one_query(const Scm& scm, const std::string& text, const std::string& method,
                  std::int64_t samples, std::uint64_t seed, bool json, Output& out,
                  std::int64_t cap) {
  QueryAst ast;
  try {
    ast = parse_query(text);
  } catch (const ParseError& e) {
    std::cerr << "query error at " << e.what() << "\n";
    return kExitUsage;
  }

  if (const auto* q = std::get_if<ProbQuery>(&ast.node)) {
    const WorldSpec world = resolve_regime(scm, q->regime);
    std::optional<Event> given;
    if (q->given) given = to_event(*q->given);
    QueryResult r = method == "mc"
                        ? monte_carlo(scm, to_event(q->event), world, given, samples, seed)
                        : exact_query(scm, to_event(q->event), world, given, cap);
    r.query = text;
    out << (json ? r.to_json().dump(2) : r.to_text()) << "\n";
    return kExitOk;
  }
  if (const auto* q = std::get_if<ExpectQuery>(&ast.node)) {
    if (method == "mc") {
      std::cerr << "expectation queries support --method exact only\n";
      return kExitUsage;
    }
    QueryResult r = QueryResult::exact_result(
        text, expectation(scm, q->var, resolve_regime(scm, q->regime), cap));
    out << (json ? r.to_json().dump(2) : r.to_text()) << "\n";
    return kExitOk;
  }
  if (const auto* q = std::get_if<AceQuery>(&ast.node)) {
    QueryResult r = q->adjusted ? adjustment_ace(scm, q->x, q->y, q->adjust, cap)
                                : ace(scm, q->x, q->y, cap);
    r.query = text;
    out << (json ? r.to_json().dump(2) : r.to_text()) << "\n";
    if (q->adjusted) {
      const Rat truth = ace(scm, q->x, q->y, cap).exact;
      if (truth != r.exact)
        std::cerr << "warning: confounded contrast: differs from interventional ACE "
                  << rat_to_string(truth) << " = " << rat_to_double(truth) << "\n";
    }
    return kExitOk;
  }
  if (const auto* q = std::get_if<DecomposeQuery>(&ast.node)) {
    Collection w1, w0;
    if (!q->w1.empty()) {
      w1 = to_collection(q->w1);
      w0 = to_collection(q->w0);
    } else {
      w1 = collection_for(scm, q->x, Value::rat(1), q->index, {q->w});
      w0 = collection_for(scm, q->x, Value::rat(0), q->index, {q->w});
    }
    const DecompositionResult d = decompose_effect(scm, w1, w0, q->x, q->y);
    if (json) {
      nlohmann::json j = {{"total", rat_to_string(d.total)},
                          {"indirect", rat_to_string(d.indirect)},
                          {"direct", rat_to_string(d.direct)}};
      out << j.dump(2) << "\n";
    } else {
      out << "total    = " << QueryResult::exact_result("", d.total).to_text() << "\n"
          << "indirect = " << QueryResult::exact_result("", d.indirect).to_text() << "\n"
          << "direct   = " << QueryResult::exact_result("", d.direct).to_text() << "\n";
    }
    return kExitOk;
  }
  const auto& q = std::get<CheckQuery>(ast.node);
  auto arg_value = [&q](const char* name) -> Value {
    for (const auto& [k, v] : q.args)
      if (k == name) return v;
    throw Error(ErrKind::BadArgument, std::string("check needs argument ") + name);
  };
  IdentityReport report;
  if (q.name == "unconfounded")
    report = check_unconfounded(scm, "model");
  else if (q.name == "dynamic")
    report = check_dynamic_unconfounded(scm, arg_value("x0"), "model");
  else if (q.name == "type_i")
    report = check_type_i(scm, arg_value("x0"), "model");
  else if (q.name == "type_ii")
    report = check_type_ii(scm, arg_value("x0"), "model");
  else if (q.name == "type_iii")
    report = check_type_iii(scm, arg_value("x0"), "model");
  else if (q.name == "modifiable")
    report = check_modifiable_confounded(scm, arg_value("x0"), "model");
  else if (q.name == "adjustment")
    report = check_adjustment(scm, "model");
  else if (q.name == "ignorability")
    report = check_ignorability(scm, "model");
  else
    throw Error(ErrKind::BadArgument, "unknown check '" + q.name + "'");

  if (json) {
    out << report.to_json().dump(2) << "\n";
  } else {
    out << (report.pass ? "[PASS] " : "[FAIL] ") << report.identity << " ("
        << report.instances.size() << " instances)\n";
    for (const auto& inst : report.instances)
      if (!inst.equal)
        out << "  mismatch " << inst.model << ": " << rat_to_string(inst.lhs) << " vs "
            << rat_to_string(inst.rhs) << "\n";
    for (const auto& n : report.notes)
      out << "  note " << n.model << ": "
          << (n.lhs == n.rhs ? "equal: " + rat_to_string(n.lhs)
                             : "differs: " + rat_to_string(n.lhs) + " vs " +
                                   rat_to_string(n.rhs))
          << "\n";
  }
  return report.pass ? kExitOk : kExitDomain;
}

void render_verify_text(const VerifyOutcome& outcome, Output& out) {
  for (const auto& report : outcome.reports) {
    out << (report.pass ? "[PASS] " : "[FAIL] ") << report.identity << " ("
        << report.instances.size() << " instances)\n";
    for (const auto& inst : report.instances)
      if (!inst.equal)
        out << "  mismatch " << inst.model << ": " << rat_to_string(inst.lhs) << " vs "
            << rat_to_string(inst.rhs) << "\n";
    for (const auto& n : report.notes)
      out << "  note " << n.model << ": "
          << (n.lhs == n.rhs ? "equal: " + rat_to_string(n.lhs)
                             : "differs: " + rat_to_string(n.lhs) + " vs " +
                                   rat_to_string(n.rhs))
          << "\n";
  }
  for (const auto& s : outcome.skipped) out << "skipped: " << s << "\n";
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"doeng — exact inference for finite structural causal models"};
  app.require_subcommand(1);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a query against a model");
  std::string eval_model, eval_query, eval_query_file, eval_method = "exact", eval_out;
  std::int64_t eval_samples = 1000000;
  std::uint64_t eval_seed = 1;
  bool eval_json = false;
  eval->add_option("model", eval_model, "model file (.scm)")->required();
  eval->add_option("-q,--query", eval_query, "query text");
  eval->add_option("--query-file", eval_query_file, "file with one query per line");
  eval->add_option("--method", eval_method, "exact|mc")
      ->check(CLI::IsMember({"exact", "mc"}));
  eval->add_option("-n,--samples", eval_samples, "Monte Carlo sample count");
  eval->add_option("--seed", eval_seed, "Monte Carlo seed");
  eval->add_flag("--json", eval_json, "emit JSON");
  eval->add_option("-o,--out", eval_out, "write output to a file");

  // verify
  auto* verify = app.add_subcommand("verify", "run the identity suite");
  std::string verify_model, verify_shape = "fig2a", verify_out, verify_x = "X",
              verify_y = "Y";
  std::int64_t verify_random = 0;
  std::uint64_t verify_seed = 0;
  bool verify_json = false;
  verify->add_option("model", verify_model, "model file (.scm)");
  verify->add_option("--random", verify_random, "verify N random models");
  verify->add_option("--seed", verify_seed, "first seed for --random");
  verify->add_option("--shape", verify_shape, "fig1a|fig1b|fig2a|fig2b")
      ->check(CLI::IsMember({"fig1a", "fig1b", "fig2a", "fig2b"}));
  verify->add_option("--x", verify_x, "treatment variable name");
  verify->add_option("--y", verify_y, "outcome variable name");
  verify->add_flag("--json", verify_json, "emit JSON");
  verify->add_option("-o,--out", verify_out, "write output to a file");

  // sample
  auto* sample = app.add_subcommand("sample", "draw an observational dataset");
  std::string sample_model, sample_out;
  std::int64_t sample_n = 0;
  std::uint64_t sample_seed = 1;
  sample->add_option("model", sample_model, "model file (.scm)")->required();
  sample->add_option("-n,--samples", sample_n, "row count")->required();
  sample->add_option("--seed", sample_seed, "sampling seed");
  sample->add_option("-o,--out", sample_out, "output CSV path")->required();

  // estimate
  auto* estimate = app.add_subcommand("estimate", "plug-in estimation from a CSV");
  std::string est_data, est_x, est_y, est_compare;
  std::vector<std::string> est_adjust;
  std::uint64_t est_seed = 1;
  int est_boot = 200;
  bool est_json = false;
  estimate->add_option("data", est_data, "CSV file")->required();
  estimate->add_option("--x", est_x, "treatment column")->required();
  estimate->add_option("--y", est_y, "outcome column")->required();
  estimate->add_option("--adjust", est_adjust, "adjustment columns")->delimiter(',');
  estimate->add_option("--compare", est_compare, "model file for exact targets");
  estimate->add_option("--seed", est_seed, "bootstrap seed");
  estimate->add_option("--bootstrap", est_boot, "bootstrap replicates");
  estimate->add_flag("--json", est_json, "emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::int64_t cap = support_cap();

  try {
    if (eval->parsed()) {
      if (eval_query.empty() == eval_query_file.empty()) {
        std::cerr << "eval needs exactly one of --query / --query-file\n";
        return kExitUsage;
      }
      const Scm scm = parse_model(read_file(eval_model));
      Output out;
      out.path = eval_out;
      int rc = kExitOk;
      if (!eval_query.empty()) {
        rc = run_one_query(scm, eval_query, eval_method, eval_samples, eval_seed, eval_json,
                           out, cap);
      } else {
        std::istringstream lines(read_file(eval_query_file));
        std::string line;
        while (std::getline(lines, line)) {
          const auto hash = line.find('#');
          if (hash != std::string::npos) line = line.substr(0, hash);
          if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
          const int one = run_one_query(scm, line, eval_method, eval_samples, eval_seed,
                                        eval_json, out, cap);
          rc = std::max(rc, one);
        }
      }
      out.flush();
      return rc;
    }

    if (verify->parsed()) {
      Output out;
      out.path = verify_out;
      bool pass = true;
      nlohmann::json jmodels = nlohmann::json::array();
      if (verify_random > 0) {
        const auto shape = shape_from_name(verify_shape);
        for (std::int64_t i = 0; i < verify_random; ++i) {
          const std::uint64_t seed = verify_seed + static_cast<std::uint64_t>(i);
          const Scm scm = random_scm(seed, *shape);
          const std::string id = verify_shape + " seed=" + std::to_string(seed);
          const VerifyOutcome outcome = run_applicable_checks(scm, id);
          pass = pass && outcome.pass;
          if (verify_json) {
            nlohmann::json jreports = nlohmann::json::array();
            for (const auto& r : outcome.reports) jreports.push_back(r.to_json());
            jmodels.push_back({{"model", id}, {"reports", jreports}, {"pass", outcome.pass}});
          } else {
            out << "== " << id << (outcome.pass ? " [PASS]" : " [FAIL]") << "\n";
            if (!outcome.pass) render_verify_text(outcome, out);
          }
        }
        if (!verify_json)
          out << (pass ? "all models pass" : "FAILURES above") << " (" << verify_random
              << " models)\n";
      } else {
        if (verify_model.empty()) {
          std::cerr << "verify needs a model file or --random N\n";
          return kExitUsage;
        }
        const Scm scm = parse_model(read_file(verify_model));
        const VerifyOutcome outcome = run_applicable_checks(scm, verify_model, verify_x,
                                                            verify_y);
        pass = outcome.pass;
        if (verify_json) {
          nlohmann::json jreports = nlohmann::json::array();
          for (const auto& r : outcome.reports) jreports.push_back(r.to_json());
          jmodels.push_back(
              {{"model", verify_model}, {"reports", jreports}, {"pass", outcome.pass}});
        } else {
          render_verify_text(outcome, out);
        }
      }
      if (verify_json) out << nlohmann::json{{"models", jmodels}, {"pass", pass}}.dump(2) << "\n";
      out.flush();
      return pass ? kExitOk : kExitDomain;
    }

    if (sample->parsed()) {
      if (sample_n < 1) {
        std::cerr << "sample needs -n >= 1\n";
        return kExitUsage;
      }
      const Scm scm = parse_model(read_file(sample_model));
      const Dataset data = sample_dataset(scm, sample_n, sample_seed);
      std::ofstream out(sample_out, std::ios::binary);
      if (!out) throw Error(ErrKind::Io, "cannot write '" + sample_out + "'");
      write_csv(data, out);
      std::cout << data.rows.size() << " rows (seed " << sample_seed << ") -> " << sample_out
                << "\n";
      return kExitOk;
    }

    // estimate
    std::ifstream in(est_data, std::ios::binary);
    if (!in) throw Error(ErrKind::Io, "cannot open '" + est_data + "'");
    const Dataset data = read_csv(in);
    for (const auto& name : {est_x, est_y}) {
      if (!data.column(name)) {
        std::cerr << "unknown column '" << name << "'\n";
        return kExitUsage;
      }
    }
    for (const auto& name : est_adjust) {
      if (!data.column(name)) {
        std::cerr << "unknown column '" << name << "'\n";
        return kExitUsage;
      }
    }
    const PlugInAdjustment est =
        plug_in_adjustment(data, est_x, est_y, est_adjust, est_boot, est_seed);
    for (const auto& w : est.warnings) std::cerr << "warning: " << w << "\n";

    nlohmann::json j = {{"adjusted", est.adjusted},
                        {"naive", est.naive},
                        {"bootstrap_stderr", est.bootstrap_se},
                        {"bootstrap_replicates", est.bootstrap_replicates},
                        {"n", data.rows.size()},
                        {"seed", est.seed}};
    if (!est_compare.empty()) {
      const Scm scm = parse_model(read_file(est_compare));
      const Rat exact_adj = adjustment_ace(scm, est_x, est_y, est_adjust, cap).exact;
      const Rat exact_ace = ace(scm, est_x, est_y, cap).exact;
      j["exact_adjusted"] = rat_to_string(exact_adj);
      j["exact_ace"] = rat_to_string(exact_ace);
      j["adjusted_error"] = est.adjusted - rat_to_double(exact_adj);
      if (est_json) {
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "adjusted  " << est.adjusted << " ± " << est.bootstrap_se
                  << " (bootstrap)\n"
                  << "naive     " << est.naive << "\n"
                  << "exact adjusted " << rat_to_string(exact_adj) << " = "
                  << rat_to_double(exact_adj) << "\n"
                  << "exact ace      " << rat_to_string(exact_ace) << " = "
                  << rat_to_double(exact_ace) << "\n"
                  << "difference     " << est.adjusted - rat_to_double(exact_adj) << "\n";
      }
    } else if (est_json) {
      std::cout << j.dump(2) << "\n";
    } else {
      std::cout << "adjusted  " << est.adjusted << " ± " << est.bootstrap_se
                << " (bootstrap)\n"
                << "naive     " << est.naive << "\n";
    }
    return kExitOk;
  } catch (const ParseError& e) {
    std::cerr << "error at " << e.what() << "\n";
    return kExitDomain;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
}
