#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "kvqe/diagnostics.hpp"
#include "kvqe/fci.hpp"
#include "kvqe/k2g.hpp"
#include "kvqe/models.hpp"
#include "kvqe/pfcidump.hpp"
#include "kvqe/qse.hpp"
#include "kvqe/vqe.hpp"

namespace kvqe {

/// Exit codes of the experiment front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

class ConfigError : public InvalidInput {
public:
  std::vector<std::string> findings;
  explicit ConfigError(std::vector<std::string> f)
      : InvalidInput(f.empty() ? std::string("invalid configuration") : f.front()), findings(std::move(f)) {}
};

struct ModelSpec {
  std::string name = "ssh-hubbard"; // or hubbard-dimer
  int ncell = 2;
  double t = 1.0; // dimer hopping
  double t1 = 1.0, t2 = 0.6, u = 4.0;
  LatticeBasis basis = LatticeBasis::band;
};

struct ExperimentConfig {
  // [input]
  std::optional<ModelSpec> model;
  std::string pfcidump, supercell;
  double r = 0.0; // label written in the R column of a single run

  // [method]
  std::string method = "fci";
  std::string preset;
  AdaptConfig adapt;
  PoolKind pool = PoolKind::GSD;
  bool momentum_filter = true;
  int trotter = 0; // 0: exact exponential
  QseOptions qse;
  std::string qse_state = "adapt"; // or reference
  int n_states = 1;
  bool compare_fci = true;

  // [scan]
  std::string scan_parameter; // model key, or "file" for PFCIDUMP lists
  std::vector<double> scan_values;
  std::vector<std::string> scan_methods;
  std::vector<std::string> scan_pfcidumps, scan_supercells;

  // [output]
  std::string csv, report;
  int threads = 0;

  /// Every recognised key with its effective value, in a fixed order.
  std::vector<std::pair<std::string, std::string>> resolved;
};

namespace detail {

inline const std::vector<std::string> &method_names() {
  static const std::vector<std::string> m{"hf", "fci", "uccsd", "uccgsd", "adapt", "qse"};
  return m;
}

inline bool known_method(const std::string &name) {
  const std::string base = boost::starts_with(name, "k2g-") ? name.substr(4) : name;
  for (const auto &m : method_names())
    if (m == base)
      return true;
  return false;
}

inline std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  if (boost::trim_copy(s).empty())
    return out;
  boost::split(out, s, boost::is_any_of(","));
  for (auto &x : out)
    boost::trim(x);
  return out;
}

/// Shortest representation that reads back to the same double.
inline std::string fmt_g(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline const std::map<std::string, std::vector<std::string>> &known_keys() {
  static const std::map<std::string, std::vector<std::string>> k{
      {"input", {"model", "ncell", "t", "t1", "t2", "u", "basis", "pfcidump", "supercell", "r"}},
      {"method",
       {"name", "preset", "epsilon", "batch", "max_iterations", "readmit", "pool", "momentum_filter", "trotter",
        "qse_truncation", "qse_spin_adapted", "qse_state", "qse_threshold", "n_states", "compare_fci",
        "gradient_tolerance", "max_evaluations"}},
      {"scan", {"parameter", "values", "methods", "pfcidumps", "supercells"}},
      {"output", {"csv", "report", "threads"}},
  };
  return k;
}

/// Collects findings while reading typed values out of the property tree.
class Reader {
public:
  Reader(const boost::property_tree::ptree &pt, std::vector<std::string> &findings)
      : pt_(pt), findings_(findings) {}

  std::optional<std::string> raw(const std::string &key) const {
    if (auto v = pt_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.')))
      return boost::trim_copy(*v);
    return std::nullopt;
  }

  std::string str(const std::string &key, const std::string &def) const { return raw(key).value_or(def); }

  double real(const std::string &key, double def) const {
    const auto v = raw(key);
    if (!v)
      return def;
    try {
      std::size_t pos = 0;
      const double x = std::stod(*v, &pos);
      if (pos == v->size())
        return x;
    } catch (const std::exception &) {
    }
    findings_.push_back(key + ": '" + *v + "' is not a number");
    return def;
  }

  int integer(const std::string &key, int def) const {
    const auto v = raw(key);
    if (!v)
      return def;
    try {
      std::size_t pos = 0;
      const int x = std::stoi(*v, &pos);
      if (pos == v->size())
        return x;
    } catch (const std::exception &) {
    }
    findings_.push_back(key + ": '" + *v + "' is not an integer");
    return def;
  }

  bool boolean(const std::string &key, bool def) const {
    const auto v = raw(key);
    if (!v)
      return def;
    const std::string s = boost::to_lower_copy(*v);
    if (s == "true" || s == "yes" || s == "1" || s == "on")
      return true;
    if (s == "false" || s == "no" || s == "0" || s == "off")
      return false;
    findings_.push_back(key + ": '" + *v + "' is not a boolean");
    return def;
  }

private:
  const boost::property_tree::ptree &pt_;
  std::vector<std::string> &findings_;
};

inline void check_file(const std::string &key, const std::string &path, std::vector<std::string> &findings) {
  if (!std::filesystem::is_regular_file(path))
    findings.push_back(key + ": input file '" + path + "' not found");
}

} // namespace detail

/// Parses and checks a configuration. `base` resolves relative file paths.
/// Every problem found is appended to `findings`; the returned config holds
/// defaults wherever a value was rejected.
inline ExperimentConfig parse_config(std::istream &in, std::vector<std::string> &findings,
                                     const std::filesystem::path &base = {}) {
  namespace pt = boost::property_tree;
  ExperimentConfig c;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error &e) {
    findings.push_back(std::string("syntax: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    return c;
  }
  for (const auto &[section, node] : tree) {
    const auto it = detail::known_keys().find(section);
    if (node.empty() && !node.data().empty()) {
      findings.push_back("key '" + section + "' outside any section");
      continue;
    }
    if (it == detail::known_keys().end()) {
      findings.push_back("unknown section [" + section + "]");
      continue;
    }
    for (const auto &[key, _] : node)
      if (std::find(it->second.begin(), it->second.end(), key) == it->second.end())
        findings.push_back("unknown key '" + key + "' in [" + section + "]");
  }
  const detail::Reader rd(tree, findings);
  auto resolve = [&](const std::string &p) {
    if (p.empty())
      return p;
    const std::filesystem::path q(p);
    return (q.is_absolute() || base.empty() ? q : base / q).lexically_normal().string();
  };
  auto &res = c.resolved;

  // [input]
  const auto model = rd.raw("input.model");
  c.pfcidump = resolve(rd.str("input.pfcidump", ""));
  c.supercell = resolve(rd.str("input.supercell", ""));
  c.r = rd.real("input.r", 0.0);
  const auto scan_files = detail::split_list(rd.str("scan.pfcidumps", ""));
  const int sources = (model ? 1 : 0) + (c.pfcidump.empty() ? 0 : 1) + (scan_files.empty() ? 0 : 1);
  if (sources == 0)
    findings.push_back("input: no input source (set input.model, input.pfcidump or scan.pfcidumps)");
  else if (sources > 1)
    findings.push_back("input: exactly one input source allowed (model, pfcidump or scan.pfcidumps)");
  if (model) {
    ModelSpec m;
    m.name = *model;
    if (m.name != "ssh-hubbard" && m.name != "hubbard-dimer")
      findings.push_back("input.model: unknown model '" + m.name + "' (accepted: ssh-hubbard, hubbard-dimer)");
    m.ncell = rd.integer("input.ncell", m.ncell);
    m.t = rd.real("input.t", m.t);
    m.t1 = rd.real("input.t1", m.t1);
    m.t2 = rd.real("input.t2", m.t2);
    m.u = rd.real("input.u", m.u);
    const std::string basis = rd.str("input.basis", "band");
    if (basis == "site")
      m.basis = LatticeBasis::site;
    else if (basis != "band")
      findings.push_back("input.basis: '" + basis + "' (accepted: band, site)");
    if (m.ncell < 1 || m.ncell > 15)
      findings.push_back("input.ncell: " + std::to_string(m.ncell) + " out of range [1, 15]");
    c.model = m;
    res.emplace_back("input.model", m.name);
    if (m.name == "hubbard-dimer") {
      res.emplace_back("input.t", detail::fmt_g(m.t));
    } else {
      res.emplace_back("input.ncell", std::to_string(m.ncell));
      res.emplace_back("input.t1", detail::fmt_g(m.t1));
      res.emplace_back("input.t2", detail::fmt_g(m.t2));
      res.emplace_back("input.basis", basis);
    }
    res.emplace_back("input.u", detail::fmt_g(m.u));
  }
  if (!c.pfcidump.empty()) {
    detail::check_file("input.pfcidump", c.pfcidump, findings);
    res.emplace_back("input.pfcidump", c.pfcidump);
  }
  if (!c.supercell.empty()) {
    detail::check_file("input.supercell", c.supercell, findings);
    res.emplace_back("input.supercell", c.supercell);
  }
  res.emplace_back("input.r", detail::fmt_g(c.r));

  // [method]
  c.method = rd.str("method.name", "fci");
  if (!detail::known_method(c.method))
    findings.push_back("method.name: unknown method '" + c.method +
                       "' (accepted: hf, fci, uccsd, uccgsd, adapt, qse, each optionally prefixed k2g-)");
  c.preset = rd.str("method.preset", "");
  if (!c.preset.empty()) {
    try {
      c.adapt = AdaptConfig::preset(c.preset);
    } catch (const InvalidInput &e) {
      findings.push_back(std::string("method.preset: ") + e.what() + " (accepted: ADAPT(m), ADAPT(X))");
    }
  }
  if (rd.raw("method.epsilon")) {
    if (!c.preset.empty())
      findings.push_back("method.epsilon: set either epsilon or preset, not both");
    c.adapt.epsilon = rd.real("method.epsilon", c.adapt.epsilon);
  }
  if (!(c.adapt.epsilon > 0.0 && c.adapt.epsilon <= 1.0))
    findings.push_back("method.epsilon: " + detail::fmt_g(c.adapt.epsilon) + " out of range (0, 1]");
  c.adapt.batch = rd.integer("method.batch", c.adapt.batch);
  if (c.adapt.batch < 1)
    findings.push_back("method.batch: must be >= 1");
  c.adapt.max_iterations = rd.integer("method.max_iterations", c.adapt.max_iterations);
  if (c.adapt.max_iterations < 0)
    findings.push_back("method.max_iterations: must be >= 0");
  c.adapt.readmit = rd.boolean("method.readmit", c.adapt.readmit);
  c.adapt.optimizer.gradient_tolerance =
      rd.real("method.gradient_tolerance", c.adapt.optimizer.gradient_tolerance);
  if (!(c.adapt.optimizer.gradient_tolerance > 0.0))
    findings.push_back("method.gradient_tolerance: must be positive");
  c.adapt.optimizer.max_evaluations = rd.integer("method.max_evaluations", c.adapt.optimizer.max_evaluations);
  if (c.adapt.optimizer.max_evaluations < 1)
    findings.push_back("method.max_evaluations: must be >= 1");
  const std::string pool = boost::to_upper_copy(rd.str("method.pool", "GSD"));
  if (pool == "SD")
    c.pool = PoolKind::SD;
  else if (pool != "GSD")
    findings.push_back("method.pool: '" + pool + "' (accepted: SD, GSD)");
  c.momentum_filter = rd.boolean("method.momentum_filter", true);
  c.trotter = rd.integer("method.trotter", 0);
  if (c.trotter < 0)
    findings.push_back("method.trotter: must be >= 0 (0 = exact exponential)");
  const std::string qt = rd.str("method.qse_truncation", "SD");
  if (qt == "full-SD")
    c.qse.truncation = QseTruncation::full_SD;
  else if (qt != "SD")
    findings.push_back("method.qse_truncation: '" + qt + "' (accepted: SD, full-SD)");
  c.qse.spin_adapted = rd.boolean("method.qse_spin_adapted", false);
  c.qse.momentum_filter = c.momentum_filter;
  c.qse.threshold = rd.real("method.qse_threshold", c.qse.threshold);
  if (!(c.qse.threshold > 0.0))
    findings.push_back("method.qse_threshold: must be positive");
  c.qse_state = rd.str("method.qse_state", "adapt");
  if (c.qse_state != "adapt" && c.qse_state != "reference")
    findings.push_back("method.qse_state: '" + c.qse_state + "' (accepted: adapt, reference)");
  c.n_states = rd.integer("method.n_states", 1);
  if (c.n_states < 1)
    findings.push_back("method.n_states: must be >= 1");
  c.compare_fci = rd.boolean("method.compare_fci", true);
  res.emplace_back("method.name", c.method);
  if (!c.preset.empty())
    res.emplace_back("method.preset", c.preset);
  res.emplace_back("method.epsilon", detail::fmt_g(c.adapt.epsilon));
  res.emplace_back("method.batch", std::to_string(c.adapt.batch));
  res.emplace_back("method.max_iterations", std::to_string(c.adapt.max_iterations));
  res.emplace_back("method.readmit", c.adapt.readmit ? "true" : "false");
  res.emplace_back("method.gradient_tolerance", detail::fmt_g(c.adapt.optimizer.gradient_tolerance));
  res.emplace_back("method.max_evaluations", std::to_string(c.adapt.optimizer.max_evaluations));
  res.emplace_back("method.pool", to_string(c.pool));
  res.emplace_back("method.momentum_filter", c.momentum_filter ? "true" : "false");
  res.emplace_back("method.trotter", std::to_string(c.trotter));
  res.emplace_back("method.qse_truncation", to_string(c.qse.truncation));
  res.emplace_back("method.qse_spin_adapted", c.qse.spin_adapted ? "true" : "false");
  res.emplace_back("method.qse_state", c.qse_state);
  res.emplace_back("method.qse_threshold", detail::fmt_g(c.qse.threshold));
  res.emplace_back("method.n_states", std::to_string(c.n_states));
  res.emplace_back("method.compare_fci", c.compare_fci ? "true" : "false");

  // [scan]
  c.scan_parameter = rd.str("scan.parameter", "");
  for (const auto &v : detail::split_list(rd.str("scan.values", ""))) {
    try {
      std::size_t pos = 0;
      c.scan_values.push_back(std::stod(v, &pos));
      if (pos != v.size())
        throw std::invalid_argument(v);
    } catch (const std::exception &) {
      findings.push_back("scan.values: '" + v + "' is not a number");
    }
  }
  c.scan_methods = detail::split_list(rd.str("scan.methods", ""));
  for (const auto &m : c.scan_methods)
    if (!detail::known_method(m))
      findings.push_back("scan.methods: unknown method '" + m + "'");
  for (const auto &f : scan_files) {
    c.scan_pfcidumps.push_back(resolve(f));
    detail::check_file("scan.pfcidumps", c.scan_pfcidumps.back(), findings);
  }
  for (const auto &f : detail::split_list(rd.str("scan.supercells", ""))) {
    c.scan_supercells.push_back(resolve(f));
    detail::check_file("scan.supercells", c.scan_supercells.back(), findings);
  }
  if (!c.scan_parameter.empty()) {
    static const std::vector<std::string> params{"t", "t1", "t2", "u"};
    if (std::find(params.begin(), params.end(), c.scan_parameter) == params.end())
      findings.push_back("scan.parameter: '" + c.scan_parameter + "' (accepted: t, t1, t2, u)");
    if (!c.model)
      findings.push_back("scan.parameter: needs a model input");
  }
  if (!c.scan_pfcidumps.empty()) {
    if (c.scan_values.size() != c.scan_pfcidumps.size())
      findings.push_back("scan.values: need one R value per file in scan.pfcidumps");
    if (!c.scan_supercells.empty() && c.scan_supercells.size() != c.scan_pfcidumps.size())
      findings.push_back("scan.supercells: need one supercell dump per file in scan.pfcidumps");
  }
  if (!c.scan_parameter.empty() || !c.scan_pfcidumps.empty()) {
    res.emplace_back("scan.parameter", c.scan_pfcidumps.empty() ? c.scan_parameter : "file");
    std::string vals, meths;
    for (double v : c.scan_values)
      vals += (vals.empty() ? "" : ",") + detail::fmt_g(v);
    for (const auto &m : c.scan_methods)
      meths += (meths.empty() ? "" : ",") + m;
    res.emplace_back("scan.values", vals);
    res.emplace_back("scan.methods", meths);
    for (std::size_t i = 0; i < c.scan_pfcidumps.size(); ++i)
      res.emplace_back("scan.pfcidumps[" + std::to_string(i) + "]", c.scan_pfcidumps[i]);
    for (std::size_t i = 0; i < c.scan_supercells.size(); ++i)
      res.emplace_back("scan.supercells[" + std::to_string(i) + "]", c.scan_supercells[i]);
  }

  // k2g needs orbital data
  std::vector<std::string> all_methods = c.scan_methods;
  all_methods.push_back(c.method);
  for (const auto &m : all_methods)
    if (boost::starts_with(m, "k2g-")) {
      const bool files = !c.pfcidump.empty() || !c.scan_pfcidumps.empty();
      const bool have = !c.supercell.empty() || !c.scan_supercells.empty();
      if (files && !have)
        findings.push_back("method '" + m + "' needs a supercell dump (input.supercell or scan.supercells)");
      if (c.model && c.model->basis == LatticeBasis::site && c.model->name == "ssh-hubbard")
        findings.push_back("method '" + m + "' needs the band basis");
      break;
    }

  // [output]
  c.csv = resolve(rd.str("output.csv", ""));
  c.report = resolve(rd.str("output.report", ""));
  c.threads = rd.integer("output.threads", 0);
  if (c.threads < 0)
    findings.push_back("output.threads: must be >= 0 (0 = KVQE_THREADS or 1)");
  res.emplace_back("output.csv", c.csv);
  res.emplace_back("output.report", c.report);
  res.emplace_back("output.threads", std::to_string(c.threads));
  return c;
}

inline ExperimentConfig load_config(const std::string &path, std::vector<std::string> &findings) {
  std::ifstream in(path);
  if (!in) {
    findings.push_back("cannot read config '" + path + "'");
    return {};
  }
  return parse_config(in, findings, std::filesystem::path(path).parent_path());
}

/// Lists every problem with the configuration and its input files; empty
/// means valid.
inline std::vector<std::string> validate(const std::string &path) {
  std::vector<std::string> findings;
  load_config(path, findings);
  return findings;
}

/// One integral source: the Hamiltonian plus, when available, the orbital
/// data needed by K2G.
struct Problem {
  IntegralSet integrals;
  std::optional<OrbitalSet> orbitals;
};

inline Problem make_problem(const ModelSpec &m) {
  if (m.name == "hubbard-dimer")
    return {build_hubbard_dimer(m.t, m.u), std::nullopt};
  auto model = ssh_hubbard_model(m.ncell, m.t1, m.t2, m.u, m.basis);
  Problem p{std::move(model.integrals), std::nullopt};
  if (m.basis == LatticeBasis::band)
    p.orbitals = std::move(model.orbitals);
  return p;
}

inline Problem load_problem(const std::string &pfcidump, const std::string &supercell) {
  Problem p{load_pfcidump(pfcidump), std::nullopt};
  if (!supercell.empty())
    p.orbitals = orbital_set(load_supercell_dump(supercell), p.integrals);
  return p;
}

/// Outcome of one method on one problem.
struct MethodResult {
  std::string method;
  double energy = 0.0;
  std::vector<double> excited; // QSE / FCI higher roots
  int parameters = 0;
  int iterations = 0;
  double residual_norm = 0.0;
  bool converged = true;
  std::string status = "ok";
  std::optional<AcseReport> acse;
  std::vector<std::string> notes;
};

inline MethodResult run_method(const std::string &method, const Problem &problem, const ExperimentConfig &cfg) {
  MethodResult out;
  out.method = method;
  std::string base = method;
  IntegralSet ints = problem.integrals;
  if (boost::starts_with(method, "k2g-")) {
    if (!problem.orbitals)
      throw InvalidInput("method '" + method + "' needs orbital data (band-basis model or supercell dump)");
    auto k = k2g(problem.integrals, *problem.orbitals);
    for (auto &w : k.realification.warnings)
      out.notes.push_back("k2g: " + w);
    out.notes.push_back("k2g: max imaginary part after rotation " + detail::fmt_g(k.rotation.max_imaginary));
    ints = std::move(k.integrals);
    base = method.substr(4);
  }

  if (base == "fci") {
    const auto r = fci(ints, cfg.n_states);
    out.energy = r.energies.front();
    out.excited.assign(r.energies.begin() + 1, r.energies.end());
    for (const auto &w : r.warnings)
      out.notes.push_back("fci: " + w);
    return out;
  }

  const VqeSystem sys = VqeSystem::build(ints);
  PoolOptions popt;
  popt.momentum_filter = cfg.momentum_filter;
  const auto diag_pool = sys.compile(build_pool(ints, PoolKind::GSD, sys.reference, popt));
  auto diagnose = [&](const VectorXcd &psi) { out.acse = acse_residuals(psi, sys.h, diag_pool); };

  if (base == "hf") {
    out.energy = energy(sys.h, sys.ref);
    diagnose(sys.ref);
    return out;
  }
  if (base == "uccsd" || base == "uccgsd") {
    const auto gens = sys.compile(build_pool(ints, base == "uccsd" ? PoolKind::SD : PoolKind::GSD, sys.reference, popt));
    const auto plan = cfg.trotter > 0 ? EvolutionPlan::trotter(cfg.trotter) : EvolutionPlan::exact();
    const auto r = ucc_vqe(sys.h, gens, sys.ref, plan, cfg.adapt.optimizer);
    out.energy = r.fit.energy;
    out.parameters = r.n_parameters;
    out.iterations = r.fit.iterations;
    out.converged = r.fit.converged;
    if (!r.fit.converged)
      out.status = "not-converged: " + r.fit.message;
    diagnose(r.state);
    return out;
  }

  // adapt and qse
  VectorXcd psi = sys.ref;
  if (base == "adapt" || cfg.qse_state == "adapt") {
    const auto gens = sys.compile(build_pool(ints, cfg.pool, sys.reference, popt));
    const auto tr = adapt_vqe(sys.h, gens, sys.ref, cfg.adapt);
    psi = tr.state;
    out.energy = tr.energy;
    out.parameters = static_cast<int>(tr.parameters.size());
    out.iterations = tr.iterations;
    out.residual_norm = tr.residual_norm_history.back();
    out.converged = tr.converged;
    if (!tr.converged)
      out.status = "not-converged: " + tr.message;
  }
  diagnose(psi);
  if (base == "qse") {
    const auto q = run_qse(sys, ints, psi, cfg.qse);
    const int n = std::min(cfg.n_states, q.retained);
    out.energy = q.energies.front();
    out.excited.assign(q.energies.begin() + 1, q.energies.begin() + n);
    out.notes.push_back("qse: " + std::to_string(q.retained) + " of " + std::to_string(q.h.rows()) +
                        " configurations retained");
  }
  return out;
}

namespace detail {

inline std::string fmt_e(double x, int digits = 10) { return format_fixed(x, digits); }

inline void write_result(std::ostream &os, const MethodResult &r, std::optional<double> e_fci) {
  os << "[result " << r.method << "]\n";
  os << "energy_hartree = " << fmt_e(r.energy) << '\n';
  for (std::size_t i = 0; i < r.excited.size(); ++i)
    os << "excited_" << i + 1 << "_hartree = " << fmt_e(r.excited[i]) << '\n';
  if (e_fci)
    os << "error_kcalmol = " << format_fixed(error_kcalmol(r.energy, *e_fci), 6) << '\n';
  os << "parameters = " << r.parameters << '\n';
  os << "iterations = " << r.iterations << '\n';
  os << "residual_norm = " << format_fixed(r.residual_norm, 12) << '\n';
  os << "status = " << r.status << '\n';
  if (r.acse) {
    os << "acse_pool_size = " << r.acse->re.size() << '\n';
    os << "acse_mare_re_kcalmol = " << format_fixed(r.acse->mare_re, 10) << '\n';
    os << "acse_mare_im_kcalmol = " << format_fixed(r.acse->mare_im, 10) << '\n';
  }
  for (const auto &n : r.notes)
    os << "note = " << n << '\n';
}

inline void write_config(std::ostream &os, const ExperimentConfig &cfg) {
  os << "[config]\n";
  for (const auto &[k, v] : cfg.resolved)
    os << k << " = " << v << '\n';
}

inline void emit(const std::string &path, const std::string &text, std::ostream &fallback) {
  if (path.empty()) {
    fallback << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw InvalidInput("cannot write '" + path + "'");
  f << text;
}

inline ExperimentConfig checked_config(const std::string &path) {
  std::vector<std::string> findings;
  ExperimentConfig cfg = load_config(path, findings);
  if (!findings.empty())
    throw ConfigError(findings);
  set_num_threads(cfg.threads);
  return cfg;
}

template <class F>
int guarded(std::ostream &err, F &&f) {
  try {
    return f();
  } catch (const ConfigError &e) {
    for (const auto &x : e.findings)
      err << "config error: " << x << '\n';
    return kExitConfig;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidInput &e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  }
}

} // namespace detail

/// Single experiment: the configured method (plus FCI for the error column
/// unless compare_fci is off). Writes the report and, if configured, CSV.
inline int run(const std::string &config_path, std::ostream &out, std::ostream &err) {
  return detail::guarded(err, [&] {
    const ExperimentConfig cfg = detail::checked_config(config_path);
    const Problem problem = cfg.model ? make_problem(*cfg.model) : load_problem(cfg.pfcidump, cfg.supercell);
    const MethodResult main = run_method(cfg.method, problem, cfg);
    std::optional<MethodResult> ref;
    if (cfg.compare_fci && cfg.method != "fci")
      ref = run_method("fci", problem, cfg);
    const std::optional<double> e_fci =
        cfg.method == "fci" ? std::optional<double>(main.energy) : (ref ? std::optional<double>(ref->energy) : std::nullopt);

    std::ostringstream rep;
    rep << "# kvqe report\n";
    detail::write_config(rep, cfg);
    rep << "[system]\n"
        << "basis = " << problem.integrals.basis_label << '\n'
        << "orbitals = " << problem.integrals.norb << '\n'
        << "electrons = " << problem.integrals.nelec << '\n'
        << "kpoints = " << problem.integrals.kmesh.nkpt() << '\n';
    detail::write_result(rep, main, e_fci);
    if (ref)
      detail::write_result(rep, *ref, e_fci);
    detail::emit(cfg.report, rep.str(), out);

    if (!cfg.csv.empty()) {
      std::vector<ScanRow> rows{{cfg.r, main.method, main.energy, std::nullopt, main.status}};
      if (ref)
        rows.push_back({cfg.r, "fci", ref->energy, std::nullopt, "ok"});
      attach_errors(rows);
      std::ostringstream csv;
      write_scan_csv(csv, rows);
      detail::emit(cfg.csv, csv.str(), out);
    }
    return static_cast<int>(kExitOk);
  });
}

/// Scan rows for every (point, method) pair, in input order. A failing
/// point is recorded with status "failed: ..." and no energy.
inline std::vector<ScanRow> scan(const ExperimentConfig &cfg, std::vector<std::string> *log = nullptr) {
  std::vector<std::string> methods = cfg.scan_methods;
  if (methods.empty())
    methods = {cfg.method};
  const bool files = !cfg.scan_pfcidumps.empty();
  if (!files && (cfg.scan_parameter.empty() || !cfg.model))
    throw ConfigError({"scan: set scan.parameter with a model input, or scan.pfcidumps"});
  if (cfg.scan_values.empty())
    throw ConfigError({"scan.values: no scan points"});
  std::vector<ScanRow> rows;
  for (std::size_t i = 0; i < cfg.scan_values.size(); ++i) {
    const double r = cfg.scan_values[i];
    std::optional<Problem> problem;
    std::string point_error;
    try {
      if (files) {
        problem = load_problem(cfg.scan_pfcidumps[i], cfg.scan_supercells.empty() ? "" : cfg.scan_supercells[i]);
      } else {
        ModelSpec m = *cfg.model;
        if (cfg.scan_parameter == "t")
          m.t = r;
        else if (cfg.scan_parameter == "t1")
          m.t1 = r;
        else if (cfg.scan_parameter == "t2")
          m.t2 = r;
        else
          m.u = r;
        problem = make_problem(m);
      }
    } catch (const std::exception &e) {
      point_error = e.what();
    }
    for (const auto &method : methods) {
      ScanRow row{r, method, std::nullopt, std::nullopt, "ok"};
      if (!problem) {
        row.status = "failed: " + point_error;
      } else {
        try {
          const MethodResult res = run_method(method, *problem, cfg);
          row.energy = res.energy;
          row.status = res.status;
        } catch (const std::exception &e) {
          row.status = std::string("failed: ") + e.what();
        }
      }
      if (log && row.status != "ok")
        log->push_back(format_fixed(r, 4) + " " + method + ": " + row.status);
      rows.push_back(std::move(row));
    }
  }
  attach_errors(rows);
  return rows;
}

inline int run_scan(const std::string &config_path, std::ostream &out, std::ostream &err) {
  return detail::guarded(err, [&] {
    const ExperimentConfig cfg = detail::checked_config(config_path);
    std::vector<std::string> log;
    const auto rows = scan(cfg, &log);
    std::ostringstream csv;
    write_scan_csv(csv, rows);
    detail::emit(cfg.csv, csv.str(), out);

    std::ostringstream rep;
    rep << "# kvqe scan report\n";
    detail::write_config(rep, cfg);
    rep << "[statistics]\n";
    std::vector<std::string> seen;
    for (const auto &row : rows)
      if (std::find(seen.begin(), seen.end(), row.method) == seen.end())
        seen.push_back(row.method);
    for (const auto &m : seen) {
      const auto s = error_stats(rows, m);
      rep << m << " = mean " << format_fixed(s.mean, 6) << " max " << format_fixed(s.max, 6) << " kcal/mol over "
          << s.count << " points\n";
    }
    rep << "[status]\n";
    if (log.empty())
      rep << "all points ok\n";
    for (const auto &l : log)
      rep << l << '\n';
    if (!cfg.report.empty())
      detail::emit(cfg.report, rep.str(), out);
    else if (!cfg.csv.empty())
      out << rep.str();
    return static_cast<int>(kExitOk);
  });
}

/// Realify a k-point integral file with its supercell dump and write the
/// real-orbital integrals.
inline int run_k2g(const std::string &in, const std::string &scell, const std::string &out_path, std::ostream &out,
                   std::ostream &err) {
  return detail::guarded(err, [&] {
    const Problem p = load_problem(in, scell);
    const auto k = k2g(p.integrals, *p.orbitals);
    write_pfcidump(k.integrals, out_path);
    out << "wrote " << out_path << " (" << k.integrals.norb << " orbitals, max imaginary part before truncation "
        << detail::fmt_g(k.rotation.max_imaginary) << ", k labels " << (k.rotation.k_labels_kept ? "kept" : "collapsed to Gamma")
        << ")\n";
    for (const auto &w : k.realification.warnings)
      out << "warning: " << w << '\n';
    return static_cast<int>(kExitOk);
  });
}

inline int run_fci(const std::string &in, int n_states, std::ostream &out, std::ostream &err) {
  return detail::guarded(err, [&] {
    const IntegralSet ints = load_pfcidump(in);
    const auto r = fci(ints, n_states);
    for (std::size_t i = 0; i < r.energies.size(); ++i)
      out << "E" << i << " = " << format_fixed(r.energies[i], 10) << '\n';
    for (const auto &w : r.warnings)
      out << "warning: " << w << '\n';
    return static_cast<int>(kExitOk);
  });
}

} // namespace kvqe
