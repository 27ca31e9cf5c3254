#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "kvqe/vqe.hpp"

namespace kvqe {

/// ACSE residuals per pool generator. Values are in Hartree; the MAREs are
/// in kcal/mol.
struct AcseReport {
  std::vector<double> re; // <[tau, H]>
  std::vector<double> im; // -i <{tau, H - E}>, E = <H>
  double mare_re = 0.0;
  double mare_im = 0.0;
  double max_residue = 0.0; // largest imaginary leftover of either list
};

/// The anticommutator is taken with H - E so that the residual is independent
/// of the energy origin and vanishes on eigenstates; at states with
/// <tau> = 0 (determinants, real states) it equals -i <{tau, H}>.
inline AcseReport acse_residuals(const VectorXcd &psi, const CompactOperator &h,
                                 std::span<const CompactOperator> pool) {
  AcseReport rep;
  rep.re.resize(pool.size());
  rep.im.resize(pool.size());
  std::vector<double> residue(pool.size());
  const VectorXcd hpsi = h.matrix * psi;
  const double e_psi = psi.dot(hpsi).real();
  parallel_for(
      pool.size(),
      [&](std::size_t b, std::size_t e) {
        VectorXcd chi, tau_h;
        for (std::size_t u = b; u < e; ++u) {
          chi.noalias() = pool[u].matrix * psi;
          tau_h.noalias() = pool[u].matrix * hpsi;
          const cplx c1 = psi.dot(tau_h); // <psi|tau H|psi>
          const cplx c2 = hpsi.dot(chi);  // <psi|H tau|psi>
          const cplx re = c1 - c2;
          const cplx t = psi.dot(chi); // <psi|tau|psi>
          const cplx im = cplx(0.0, -1.0) * (c1 + c2 - 2.0 * e_psi * t);
          rep.re[u] = re.real();
          rep.im[u] = im.real();
          residue[u] = std::max(std::abs(re.imag()), std::abs(im.imag()));
        }
      },
      8);
  for (std::size_t u = 0; u < pool.size(); ++u) {
    rep.mare_re = std::max(rep.mare_re, std::abs(rep.re[u]));
    rep.mare_im = std::max(rep.mare_im, std::abs(rep.im[u]));
    rep.max_residue = std::max(rep.max_residue, residue[u]);
  }
  rep.mare_re = hartree_to_kcalmol(rep.mare_re);
  rep.mare_im = hartree_to_kcalmol(rep.mare_im);
  return rep;
}

/// One (R, method) point of a potential-energy scan. A failed point has no
/// energy and is written as NaN.
struct ScanRow {
  double r = 0.0;
  std::string method;
  std::optional<double> energy;
  std::optional<double> error_kcalmol;
  std::string status = "ok";
};

/// Rounds to the serialized 8-decimal Hartree resolution.
inline double round_hartree(double e) { return std::round(e * 1e8) / 1e8; }

/// Error vs FCI from the rounded energies, so differences below the
/// serialized resolution come out exactly zero.
inline double error_kcalmol(double e_method, double e_fci) {
  const double d = hartree_to_kcalmol(round_hartree(e_method) - round_hartree(e_fci));
  return d == 0.0 ? 0.0 : d; // no "-0.000000"
}

/// Fills error_kcalmol for every row that has a matching FCI row at the same R.
inline void attach_errors(std::vector<ScanRow> &rows, const std::string &reference = "fci") {
  for (auto &row : rows) {
    row.error_kcalmol.reset();
    if (!row.energy)
      continue;
    for (const auto &ref : rows)
      if (ref.method == reference && ref.r == row.r && ref.energy) {
        row.error_kcalmol = error_kcalmol(*row.energy, *ref.energy);
        break;
      }
  }
}

struct ErrorStats {
  double mean = 0.0;
  double max = 0.0;
  int count = 0;
};

/// Mean and max absolute error of one method over the rows that have one.
inline ErrorStats error_stats(const std::vector<ScanRow> &rows, const std::string &method) {
  ErrorStats s;
  std::vector<double> v;
  for (const auto &r : rows)
    if (r.method == method && r.error_kcalmol)
      v.push_back(std::abs(*r.error_kcalmol));
  std::sort(v.begin(), v.end()); // order-independent summation
  for (double x : v) {
    s.mean += x;
    s.max = std::max(s.max, x);
  }
  s.count = static_cast<int>(v.size());
  if (s.count > 0)
    s.mean /= s.count;
  return s;
}

inline std::string format_fixed(double x, int digits) {
  if (!std::isfinite(x))
    return "NaN";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  std::string s(buf);
  // "-0.000..." after rounding prints as zero
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos)
    s.erase(0, 1);
  return s;
}

inline const char *kScanCsvHeader = "R,method,energy_hartree,error_kcalmol";

inline void write_scan_csv(std::ostream &os, const std::vector<ScanRow> &rows) {
  os << kScanCsvHeader << '\n';
  for (const auto &r : rows) {
    os << format_fixed(r.r, 4) << ',' << r.method << ',' << format_fixed(r.energy.value_or(NAN), 8) << ','
       << format_fixed(r.error_kcalmol.value_or(NAN), 6) << '\n';
  }
}

} // namespace kvqe
