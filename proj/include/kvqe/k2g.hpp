#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kvqe/integrals.hpp"
#include "kvqe/models.hpp"
#include "kvqe/pfcidump.hpp"

namespace kvqe {

inline constexpr double kImaginaryTruncation = 1e-10;

struct RealificationResult {
  RMatrix coefficients;     // real orbitals in the supercell basis
  CMatrix rotation;         // U = C~^dag S C, MO space
  Eigen::VectorXd energies; // Fock eigenvalues of the real orbitals
  std::vector<std::string> warnings;
};

struct RotationReport {
  double max_imaginary = 0.0; // before truncation
  bool truncated = false;
  bool k_labels_kept = false;
};

namespace detail {

/// Orthonormal (metric S) basis of the real column span of M.
inline RMatrix real_span(const RMatrix &m, const RMatrix &s, double rel_tol = 1e-8) {
  const RMatrix g = m.transpose() * s * m;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (g + g.transpose()));
  const double top = es.eigenvalues().size() ? es.eigenvalues().maxCoeff() : 0.0;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > rel_tol * top)
      keep.push_back(i);
  RMatrix b(m.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    b.col(static_cast<Eigen::Index>(j)) =
        m * es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  return b;
}

/// Symmetric (Loewdin) orthonormalization in metric S.
inline RMatrix loewdin(const RMatrix &y, const RMatrix &s) {
  const RMatrix g = y.transpose() * s * y;
  Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (g + g.transpose()));
  const Eigen::VectorXd inv_sqrt = es.eigenvalues().cwiseSqrt().cwiseInverse();
  return y * es.eigenvectors() * inv_sqrt.asDiagonal() * es.eigenvectors().transpose();
}

/// Basis-independent representative of a degenerate real block: pivoted
/// Gram-Schmidt on the S-projector columns, then Loewdin orthonormalization.
inline RMatrix canonical_block(const RMatrix &c, const RMatrix &s) {
  const Eigen::Index m = c.cols();
  RMatrix p = c * c.transpose() * s; // projector onto the block
  RMatrix y(c.rows(), m);
  RMatrix resid = p;
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::Index piv = 0;
    double best = -1.0;
    for (Eigen::Index i = 0; i < resid.cols(); ++i) {
      const double nrm = resid.col(i).norm();
      if (nrm > best + 1e-10) {
        best = nrm;
        piv = i;
      }
    }
    Eigen::VectorXd v = resid.col(piv);
    v /= std::sqrt(v.dot(s * v));
    y.col(j) = v;
    resid -= v * (v.transpose() * s * resid);
  }
  return loewdin(y, s);
}

inline void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::abs(v(i)) > 1e-10) {
      if (v(i) < 0)
        v = -v;
      return;
    }
}

} // namespace detail

/// Real orbitals spanning the same space as the complex k-point orbitals.
/// `space` labels orbitals (e.g. 0 occupied, 1 virtual); rotations never mix
/// orbitals with different labels. Empty means a single space.
inline RealificationResult realify(const OrbitalSet &orb, std::vector<int> space = {}) {
  const CMatrix &ct = orb.coefficients;
  const Eigen::Index nbas = ct.rows(), nmo = ct.cols();
  if (orb.energies.size() != nmo || orb.overlap.rows() != nbas || orb.overlap.cols() != nbas ||
      static_cast<Eigen::Index>(orb.orb_k.size()) != nmo)
    throw InvalidInput("orbital set dimensions are inconsistent");
  const RMatrix &s = orb.overlap;
  const CMatrix sc = s.cast<cplx>();
  const double ortho = (ct.adjoint() * sc * ct - CMatrix::Identity(nmo, nmo)).cwiseAbs().maxCoeff();
  if (ortho > 1e-8)
    throw InvalidInput("orbitals are not orthonormal in the overlap metric (deviation " + std::to_string(ortho) +
                       ")");
  for (int k : orb.orb_k) {
    if (k < 0 || k >= orb.kmesh.nkpt())
      throw InvalidInput("orbital k index out of range");
    if (!orb.kmesh.negation_partner(k))
      throw InvalidInput("k-mesh is not closed under negation: no partner for k-point " + std::to_string(k + 1));
  }
  if (space.empty())
    space.assign(static_cast<std::size_t>(nmo), 0);
  if (static_cast<Eigen::Index>(space.size()) != nmo)
    throw InvalidInput("space labels have wrong length");

  RealificationResult res;
  const CMatrix f_ao = sc * ct * orb.energies.cast<cplx>().asDiagonal() * ct.adjoint() * sc;
  res.coefficients.resize(nbas, nmo);
  res.energies.resize(nmo);
  Eigen::Index out_col = 0;

  std::map<int, std::vector<Eigen::Index>> groups;
  for (Eigen::Index j = 0; j < nmo; ++j)
    groups[space[static_cast<std::size_t>(j)]].push_back(j);
  std::vector<std::pair<int, std::pair<double, double>>> ranges;
  for (const auto &[label, cols] : groups) {
    const auto m = static_cast<Eigen::Index>(cols.size());
    RMatrix cand(nbas, 2 * m);
    for (Eigen::Index j = 0; j < m; ++j) {
      cand.col(j) = ct.col(cols[static_cast<std::size_t>(j)]).real();
      cand.col(m + j) = ct.col(cols[static_cast<std::size_t>(j)]).imag();
    }
    const RMatrix b = detail::real_span(cand, s);
    if (b.cols() != m)
      throw NumericalError("orbital space " + std::to_string(label) +
                           " is not closed under complex conjugation (real span has dimension " +
                           std::to_string(b.cols()) + ", expected " + std::to_string(m) + ")");
    const CMatrix fb = b.cast<cplx>().transpose() * f_ao * b.cast<cplx>();
    const double imag = fb.imag().cwiseAbs().maxCoeff();
    if (imag > 1e-8)
      throw NumericalError("Fock matrix in the real span has imaginary part " + std::to_string(imag));
    const RMatrix fr = 0.5 * (fb.real() + fb.real().transpose());
    Eigen::SelfAdjointEigenSolver<RMatrix> es(fr);
    RMatrix c = b * es.eigenvectors();
    const Eigen::VectorXd e = es.eigenvalues();
    for (Eigen::Index i = 0; i < m;) {
      Eigen::Index j = i + 1;
      while (j < m && std::abs(e(j) - e(i)) <= 1e-8 * std::max(1.0, std::abs(e(i))))
        ++j;
      if (j - i > 1)
        c.middleCols(i, j - i) = detail::canonical_block(c.middleCols(i, j - i), s);
      i = j;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      detail::fix_sign(c.col(j));
      res.coefficients.col(out_col) = c.col(j);
      res.energies(out_col) = e(j);
      ++out_col;
    }
    ranges.push_back({label, {e.minCoeff(), e.maxCoeff()}});
  }
  for (std::size_t a = 0; a < ranges.size(); ++a)
    for (std::size_t b = a + 1; b < ranges.size(); ++b) {
      const auto [lo_a, hi_a] = ranges[a].second;
      const auto [lo_b, hi_b] = ranges[b].second;
      if (std::min(hi_a, hi_b) >= std::max(lo_a, lo_b) - 1e-8)
        res.warnings.push_back("orbital spaces " + std::to_string(ranges[a].first) + " and " +
                               std::to_string(ranges[b].first) + " overlap or touch in energy; not mixed");
    }
  res.rotation = ct.adjoint() * sc * res.coefficients.cast<cplx>();
  const double unit = (res.rotation.adjoint() * res.rotation - CMatrix::Identity(nmo, nmo)).cwiseAbs().maxCoeff();
  if (unit > 1e-10)
    throw NumericalError("realified orbitals leave the original span (U^dag U deviation " + std::to_string(unit) +
                         ")");
  return res;
}

/// Space labels from a reference determinant: 0 doubly occupied, 1 singly
/// occupied, 2 empty.
inline std::vector<int> occupation_spaces(const ReferenceDeterminant &ref, int norb) {
  std::vector<int> label(static_cast<std::size_t>(norb), 2);
  for (int q : ref.occupied)
    label[static_cast<std::size_t>(q / 2)] -= 1;
  return label;
}

/// h' = U^dag h U and
/// h'^{ij}_{kl} = sum conj(U_pi) conj(U_qj) U_rk U_sl h^{pq}_{rs}.
/// Imaginary parts up to 1e-10 are truncated (the pre-truncation maximum is
/// reported). k labels survive only when U is block diagonal in k; otherwise
/// the result is labelled as a Gamma-point set.
inline IntegralSet rotate_integrals(const IntegralSet &ints, const CMatrix &u, RotationReport *report = nullptr) {
  const int n = ints.norb;
  if (u.rows() != n || u.cols() != n)
    throw InvalidInput("rotation has wrong dimensions");
  const double dev = (u.adjoint() * u - CMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (dev > 1e-8)
    throw InvalidInput("rotation is not unitary (deviation " + std::to_string(dev) + ")");
  IntegralSet out = ints;
  out.h1 = u.adjoint() * ints.h1 * u;

  // Quarter transforms, one index at a time.
  TwoBodyTensor a(n), b(n);
  const auto idx = [n](int p, int q, int r, int s) {
    return ((static_cast<std::size_t>(p) * n + q) * n + r) * n + s;
  };
  const auto &src = ints.h2.data();
  auto ta = a.data();
  auto tb = b.data();
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < n; ++p) {
      const cplx w = std::conj(u(p, i));
      if (w == cplx{})
        continue;
      for (std::size_t rest = 0; rest < static_cast<std::size_t>(n) * n * n; ++rest)
        ta[static_cast<std::size_t>(i) * n * n * n + rest] += w * src[static_cast<std::size_t>(p) * n * n * n + rest];
    }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int q = 0; q < n; ++q) {
        const cplx w = std::conj(u(q, j));
        if (w == cplx{})
          continue;
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s)
            tb[idx(i, j, r, s)] += w * ta[idx(i, q, r, s)];
      }
  std::fill(ta.begin(), ta.end(), cplx{});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int r = 0; r < n; ++r) {
          const cplx w = u(r, k);
          if (w == cplx{})
            continue;
          for (int s = 0; s < n; ++s)
            ta[idx(i, j, k, s)] += w * tb[idx(i, j, r, s)];
        }
  auto dst = out.h2.data();
  std::fill(dst.begin(), dst.end(), cplx{});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
          cplx v{};
          for (int s = 0; s < n; ++s)
            v += u(s, l) * ta[idx(i, j, k, s)];
          dst[idx(i, j, k, l)] = v;
        }

  // Remove round-off below the serialization threshold relative to scale.
  for (auto &v : dst)
    if (std::abs(v) < 1e-14)
      v = cplx{};
  for (Eigen::Index i = 0; i < out.h1.size(); ++i)
    if (std::abs(out.h1.data()[i]) < 1e-14)
      out.h1.data()[i] = cplx{};

  bool block_diagonal = true;
  for (int p = 0; p < n && block_diagonal; ++p)
    for (int q = 0; q < n; ++q)
      if (std::abs(u(p, q)) > 1e-12 && ints.orb_k[static_cast<std::size_t>(p)] != ints.orb_k[static_cast<std::size_t>(q)]) {
        block_diagonal = false;
        break;
      }
  if (!block_diagonal) {
    out.kmesh = KMesh::gamma();
    out.orb_k.assign(static_cast<std::size_t>(n), 0);
  } else {
    // Momentum-forbidden elements are zero by symmetry; clear round-off.
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        if (!out.one_body_allowed(p, q))
          out.h1(p, q) = cplx{};
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s)
            if (!out.two_body_allowed(p, q, r, s))
              out.h2(p, q, r, s) = cplx{};
      }
  }

  const double imag = out.max_imaginary();
  const bool truncate = imag <= kImaginaryTruncation;
  if (truncate) {
    out.h1 = out.h1.real().cast<cplx>();
    for (auto &v : dst)
      v = cplx(v.real(), 0.0);
  }
  if (report)
    *report = {imag, truncate, block_diagonal};
  return out;
}

/// Orbital set described by a supercell dump, with k labels taken from the
/// matching integral file.
inline OrbitalSet orbital_set(const SupercellDump &dump, const IntegralSet &ints) {
  if (dump.coefficients.cols() != ints.norb)
    throw InvalidInput("supercell dump has " + std::to_string(dump.coefficients.cols()) + " orbitals, integrals have " +
                       std::to_string(ints.norb));
  return OrbitalSet{dump.coefficients, dump.energies, dump.overlap, ints.kmesh, ints.orb_k};
}

struct K2GResult {
  IntegralSet integrals;
  RealificationResult realification;
  RotationReport rotation;
};

/// Full K2G step: realify, rotate, and require real integrals.
inline K2GResult k2g(const IntegralSet &ints, const OrbitalSet &orb) {
  K2GResult r;
  r.realification = realify(orb, occupation_spaces(aufbau_reference(ints), ints.norb));
  r.integrals = rotate_integrals(ints, r.realification.rotation, &r.rotation);
  if (r.rotation.max_imaginary > 1e-8)
    throw NumericalError("realified integrals keep imaginary parts up to " + std::to_string(r.rotation.max_imaginary));
  r.integrals.basis_label = "k2g";
  return r;
}

} // namespace kvqe
