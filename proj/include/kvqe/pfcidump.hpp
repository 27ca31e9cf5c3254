#pragma once

// Text formats shared with the integral exporter.
//
// PFCIDUMP:
//   &PFCI NORB=<n> NELEC=<n> MS2=<n> NKPT=<n> ECORE=<real>
//   KPT <idx> <fx> <fy> <fz>          (NKPT lines, idx 1-based)
//   ORBK <k_1> ... <k_NORB>           (1-based k index per orbital)
//   <re> <im> <p> <q> <r> <s>         (integral records, 1-based orbitals)
// A record with r = s = 0 is h^p_q; all four indices zero adds to ECORE.
// Two-body records follow h^{pq}_{rs} = (p s | electron 1) (q r | electron 2),
// entering H with a factor 1/2. Every nonzero element is listed; unlisted
// elements are zero. '#' starts a comment.
//
// Supercell dump (same lexical rules):
//   &SCELL NBAS=<n> NMO=<n>           (optional; otherwise sized by indices)
//   CMO <row> <col> <re> <im>
//   EIG <col> <re>
//   SOV <row> <col> <re>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "kvqe/integrals.hpp"

namespace kvqe {

inline constexpr double kSerializationThreshold = 1e-12;

class ParseError : public InvalidInput {
public:
  ParseError(const std::string &path, int line, const std::string &what)
      : InvalidInput(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] int line() const { return line_; }

private:
  int line_;
};

namespace detail {

inline std::string strip_comment(const std::string &s) {
  const auto pos = s.find('#');
  return pos == std::string::npos ? s : s.substr(0, pos);
}

inline std::vector<std::string> split_ws(const std::string &s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string tok; is >> tok;)
    out.push_back(tok);
  return out;
}

inline double to_real(const std::string &tok, const std::string &path, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size())
      throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception &) {
    throw ParseError(path, line, "expected a real number, got '" + tok + "'");
  }
}

inline long to_int(const std::string &tok, const std::string &path, int line) {
  try {
    std::size_t used = 0;
    long v = std::stol(tok, &used);
    if (used != tok.size())
      throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception &) {
    throw ParseError(path, line, "expected an integer, got '" + tok + "'");
  }
}

/// Parses `&TAG KEY=VALUE ...` into a map. Keys are upper-cased.
inline std::map<std::string, std::string> parse_header(const std::vector<std::string> &toks,
                                                       const std::string &path, int line) {
  std::map<std::string, std::string> kv;
  for (std::size_t i = 1; i < toks.size(); ++i) {
    const auto eq = toks[i].find('=');
    if (eq == std::string::npos || eq == 0)
      throw ParseError(path, line, "malformed header field '" + toks[i] + "'");
    std::string key = toks[i].substr(0, eq);
    for (auto &c : key)
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    kv[key] = toks[i].substr(eq + 1);
  }
  return kv;
}

inline std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

} // namespace detail

inline IntegralSet parse_pfcidump(std::istream &in, const std::string &path = "<stream>") {
  IntegralSet ints;
  bool have_header = false, have_orbk = false;
  int nkpt = 0;
  std::vector<bool> kpt_seen;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto toks = detail::split_ws(detail::strip_comment(raw));
    if (toks.empty())
      continue;
    if (!have_header) {
      if (toks[0] != "&PFCI")
        throw ParseError(path, line, "expected '&PFCI' header");
      auto kv = detail::parse_header(toks, path, line);
      for (const char *key : {"NORB", "NELEC", "MS2", "NKPT", "ECORE"})
        if (!kv.count(key))
          throw ParseError(path, line, std::string("header lacks ") + key);
      const int norb = static_cast<int>(detail::to_int(kv["NORB"], path, line));
      if (norb <= 0)
        throw ParseError(path, line, "NORB must be positive");
      ints = IntegralSet::zeros(norb, static_cast<int>(detail::to_int(kv["NELEC"], path, line)),
                                static_cast<int>(detail::to_int(kv["MS2"], path, line)));
      nkpt = static_cast<int>(detail::to_int(kv["NKPT"], path, line));
      if (nkpt <= 0)
        throw ParseError(path, line, "NKPT must be positive");
      ints.kmesh.points.assign(static_cast<std::size_t>(nkpt), KVector{0, 0, 0});
      kpt_seen.assign(static_cast<std::size_t>(nkpt), false);
      ints.ecore = detail::to_real(kv["ECORE"], path, line);
      if (kv.count("BASIS"))
        ints.basis_label = kv["BASIS"];
      have_header = true;
      continue;
    }
    if (toks[0] == "KPT") {
      if (toks.size() != 5)
        throw ParseError(path, line, "KPT needs an index and three coordinates");
      const long idx = detail::to_int(toks[1], path, line);
      if (idx < 1 || idx > nkpt)
        throw ParseError(path, line, "KPT index out of range");
      auto &pt = ints.kmesh.points[static_cast<std::size_t>(idx - 1)];
      for (int d = 0; d < 3; ++d)
        pt[d] = detail::to_real(toks[static_cast<std::size_t>(2 + d)], path, line);
      kpt_seen[static_cast<std::size_t>(idx - 1)] = true;
      continue;
    }
    if (toks[0] == "ORBK") {
      if (static_cast<int>(toks.size()) != ints.norb + 1)
        throw ParseError(path, line, "ORBK needs NORB entries");
      for (int p = 0; p < ints.norb; ++p) {
        const long k = detail::to_int(toks[static_cast<std::size_t>(p + 1)], path, line);
        if (k < 1 || k > nkpt)
          throw ParseError(path, line, "ORBK entry out of range");
        ints.orb_k[static_cast<std::size_t>(p)] = static_cast<int>(k - 1);
      }
      have_orbk = true;
      continue;
    }
    if (toks.size() != 6)
      throw ParseError(path, line, "integral record needs 're im p q r s'");
    if (!have_orbk && nkpt > 1)
      throw ParseError(path, line, "integral record before ORBK");
    const cplx v{detail::to_real(toks[0], path, line), detail::to_real(toks[1], path, line)};
    int idx[4];
    for (int i = 0; i < 4; ++i) {
      const long x = detail::to_int(toks[static_cast<std::size_t>(2 + i)], path, line);
      if (x < 0 || x > ints.norb)
        throw ParseError(path, line, "orbital index out of range");
      idx[i] = static_cast<int>(x) - 1;
    }
    const auto [p, q, r, s] = idx;
    if (p < 0 && q < 0 && r < 0 && s < 0) {
      if (v.imag() != 0.0)
        throw ParseError(path, line, "core energy addend must be real");
      ints.ecore += v.real();
    } else if (r < 0 && s < 0 && p >= 0 && q >= 0) {
      if (!ints.one_body_allowed(p, q))
        throw ParseError(path, line, "one-body integral violates crystal momentum conservation");
      ints.h1(p, q) = v;
    } else if (p >= 0 && q >= 0 && r >= 0 && s >= 0) {
      if (!ints.two_body_allowed(p, q, r, s))
        throw ParseError(path, line, "two-body integral violates crystal momentum conservation");
      ints.h2(p, q, r, s) = v;
    } else {
      throw ParseError(path, line, "invalid index pattern");
    }
  }
  if (!have_header)
    throw ParseError(path, line, "missing '&PFCI' header");
  for (int k = 0; k < nkpt; ++k)
    if (!kpt_seen[static_cast<std::size_t>(k)])
      throw ParseError(path, line, "KPT " + std::to_string(k + 1) + " missing");
  if (!have_orbk && nkpt > 1)
    throw ParseError(path, line, "ORBK line missing");
  try {
    ints.validate(1e-8);
  } catch (const InvalidInput &e) {
    throw InvalidInput(path + ": " + e.what());
  }
  return ints;
}

inline IntegralSet load_pfcidump(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InvalidInput("cannot open " + path);
  return parse_pfcidump(in, path);
}

inline void write_pfcidump(const IntegralSet &ints, std::ostream &out) {
  out << "&PFCI NORB=" << ints.norb << " NELEC=" << ints.nelec << " MS2=" << ints.ms2
      << " NKPT=" << ints.kmesh.nkpt() << " ECORE=" << detail::fmt_real(ints.ecore) << "\n";
  if (!ints.basis_label.empty())
    out << "# basis " << ints.basis_label << "\n";
  out << "# two-body records: h^{pq}_{rs}, p,s electron 1, q,r electron 2, H = 1/2 sum h a+p a+q ar as\n";
  for (int k = 0; k < ints.kmesh.nkpt(); ++k) {
    const auto &pt = ints.kmesh.points[static_cast<std::size_t>(k)];
    out << "KPT " << (k + 1) << " " << detail::fmt_real(pt[0]) << " " << detail::fmt_real(pt[1]) << " "
        << detail::fmt_real(pt[2]) << "\n";
  }
  out << "ORBK";
  for (int k : ints.orb_k)
    out << " " << (k + 1);
  out << "\n";
  auto emit = [&](cplx v, int p, int q, int r, int s) {
    if (std::abs(v) < kSerializationThreshold)
      return;
    out << detail::fmt_real(v.real()) << " " << detail::fmt_real(v.imag()) << " " << p << " " << q << " " << r
        << " " << s << "\n";
  };
  const int n = ints.norb;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
          emit(ints.h2(p, q, r, s), p + 1, q + 1, r + 1, s + 1);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      emit(ints.h1(p, q), p + 1, q + 1, 0, 0);
}

inline void write_pfcidump(const IntegralSet &ints, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw InvalidInput("cannot write " + path);
  write_pfcidump(ints, out);
  if (!out)
    throw InvalidInput("I/O error writing " + path);
}

/// Supercell orbital data: columns are MOs in PFCIDUMP orbital order, rows are
/// supercell basis functions.
struct SupercellDump {
  CMatrix coefficients;
  Eigen::VectorXd energies;
  RMatrix overlap;
};

inline SupercellDump parse_supercell_dump(std::istream &in, const std::string &path = "<stream>") {
  struct Cmo {
    long r, c;
    cplx v;
  };
  std::vector<Cmo> cmo;
  std::vector<std::pair<long, double>> eig;
  std::vector<std::tuple<long, long, double>> sov;
  long nbas = 0, nmo = 0;
  bool sized = false;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto t = detail::split_ws(detail::strip_comment(raw));
    if (t.empty())
      continue;
    if (t[0] == "&SCELL") {
      auto kv = detail::parse_header(t, path, line);
      if (!kv.count("NBAS") || !kv.count("NMO"))
        throw ParseError(path, line, "&SCELL needs NBAS and NMO");
      nbas = detail::to_int(kv["NBAS"], path, line);
      nmo = detail::to_int(kv["NMO"], path, line);
      sized = true;
    } else if (t[0] == "CMO" && t.size() == 5) {
      cmo.push_back({detail::to_int(t[1], path, line), detail::to_int(t[2], path, line),
                     {detail::to_real(t[3], path, line), detail::to_real(t[4], path, line)}});
    } else if (t[0] == "EIG" && t.size() == 3) {
      eig.emplace_back(detail::to_int(t[1], path, line), detail::to_real(t[2], path, line));
    } else if (t[0] == "SOV" && t.size() == 4) {
      sov.emplace_back(detail::to_int(t[1], path, line), detail::to_int(t[2], path, line),
                       detail::to_real(t[3], path, line));
    } else {
      throw ParseError(path, line, "unrecognized supercell record '" + t[0] + "'");
    }
  }
  if (!sized) {
    for (const auto &c : cmo) {
      nbas = std::max(nbas, c.r);
      nmo = std::max(nmo, c.c);
    }
    for (const auto &[c, e] : eig)
      nmo = std::max(nmo, c);
    for (const auto &[r, c, v] : sov)
      nbas = std::max({nbas, r, c});
  }
  if (nbas <= 0 || nmo <= 0)
    throw ParseError(path, line, "supercell dump has no coefficients");
  SupercellDump d;
  d.coefficients = CMatrix::Zero(nbas, nmo);
  d.energies = Eigen::VectorXd::Zero(nmo);
  d.overlap = sov.empty() ? RMatrix(RMatrix::Identity(nbas, nbas)) : RMatrix(RMatrix::Zero(nbas, nbas));
  for (const auto &c : cmo) {
    if (c.r < 1 || c.r > nbas || c.c < 1 || c.c > nmo)
      throw ParseError(path, line, "CMO index out of range");
    d.coefficients(c.r - 1, c.c - 1) = c.v;
  }
  std::vector<bool> seen(static_cast<std::size_t>(nmo), false);
  for (const auto &[c, e] : eig) {
    if (c < 1 || c > nmo)
      throw ParseError(path, line, "EIG index out of range");
    d.energies(c - 1) = e;
    seen[static_cast<std::size_t>(c - 1)] = true;
  }
  for (long c = 0; c < nmo; ++c)
    if (!seen[static_cast<std::size_t>(c)])
      throw ParseError(path, line, "EIG missing for orbital " + std::to_string(c + 1));
  for (const auto &[r, c, v] : sov) {
    if (r < 1 || r > nbas || c < 1 || c > nbas)
      throw ParseError(path, line, "SOV index out of range");
    d.overlap(r - 1, c - 1) = v;
  }
  return d;
}

inline SupercellDump load_supercell_dump(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw InvalidInput("cannot open " + path);
  return parse_supercell_dump(in, path);
}

inline void write_supercell_dump(const SupercellDump &d, std::ostream &out) {
  out << "&SCELL NBAS=" << d.coefficients.rows() << " NMO=" << d.coefficients.cols() << "\n";
  for (Eigen::Index r = 0; r < d.coefficients.rows(); ++r)
    for (Eigen::Index c = 0; c < d.coefficients.cols(); ++c)
      if (std::abs(d.coefficients(r, c)) >= kSerializationThreshold)
        out << "CMO " << r + 1 << " " << c + 1 << " " << detail::fmt_real(d.coefficients(r, c).real()) << " "
            << detail::fmt_real(d.coefficients(r, c).imag()) << "\n";
  for (Eigen::Index c = 0; c < d.energies.size(); ++c)
    out << "EIG " << c + 1 << " " << detail::fmt_real(d.energies(c)) << "\n";
  for (Eigen::Index r = 0; r < d.overlap.rows(); ++r)
    for (Eigen::Index c = 0; c < d.overlap.cols(); ++c)
      if (std::abs(d.overlap(r, c)) >= kSerializationThreshold)
        out << "SOV " << r + 1 << " " << c + 1 << " " << detail::fmt_real(d.overlap(r, c)) << "\n";
}

inline void write_supercell_dump(const SupercellDump &d, const std::string &path) {
  std::ofstream out(path);
  if (!out)
    throw InvalidInput("cannot write " + path);
  write_supercell_dump(d, out);
}

} // namespace kvqe
