#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "kvqe/integrals.hpp"

namespace kvqe {

enum class LatticeBasis { site, band };

/// Supercell orbital data behind a k-point integral set: columns of
/// `coefficients` are the MOs (same order as the integral set) expanded in
/// the supercell basis with overlap `overlap`; `energies` are Fock
/// eigenvalues.
struct OrbitalSet {
  CMatrix coefficients;
  Eigen::VectorXd energies;
  RMatrix overlap;
  KMesh kmesh;
  std::vector<int> orb_k;
};

struct SshHubbardModel {
  IntegralSet integrals;
  OrbitalSet orbitals; // band basis only; site basis carries the identity
};

namespace detail {

/// Periodic chain with sites (cell n, sublattice A/B) -> 2n, 2n+1, intracell
/// hopping t1 (A_n - B_n) and intercell hopping t2 (B_n - A_{n+1}).
inline RMatrix ssh_hopping(int ncell, double t1, double t2) {
  const int ns = 2 * ncell;
  RMatrix t = RMatrix::Zero(ns, ns);
  for (int n = 0; n < ncell; ++n) {
    const int a = 2 * n, b = 2 * n + 1, a_next = (2 * n + 2) % ns;
    t(a, b) -= t1;
    t(b, a) -= t1;
    t(b, a_next) -= t2;
    t(a_next, b) -= t2;
  }
  return t;
}

/// MO integrals of a site-local Hubbard interaction U sum_i n_i,up n_i,down.
inline void hubbard_two_body(const CMatrix &c, double u, IntegralSet &ints) {
  const int n = ints.norb;
  const int ns = static_cast<int>(c.rows());
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          if (!ints.two_body_allowed(p, q, r, s))
            continue;
          cplx v{};
          for (int i = 0; i < ns; ++i)
            v += std::conj(c(i, p)) * std::conj(c(i, q)) * c(i, r) * c(i, s);
          ints.h2(p, q, r, s) = u * v;
        }
}

} // namespace detail

/// Two-site-per-cell Su-Schrieffer-Heeger chain with on-site Hubbard U on
/// ncell cells, periodic, half filled. The site basis is a real Gamma-point
/// supercell problem; the band basis uses Bloch orbitals of the 2x2 hopping
/// matrix at k = m/ncell with the Bloch phase measured from the cell center
/// (position n + x_s - 1/4, x_A = 0, x_B = 1/2) and the A component of each
/// band vector real and positive. Zone-boundary orbitals therefore carry a
/// complex overall phase and the band integrals are genuinely complex.
inline SshHubbardModel ssh_hubbard_model(int ncell, double t1, double t2, double u, LatticeBasis basis) {
  if (ncell < 1)
    throw InvalidInput("ncell must be at least 1");
  const int ns = 2 * ncell;
  const RMatrix hop = detail::ssh_hopping(ncell, t1, t2);
  SshHubbardModel model;
  IntegralSet &ints = model.integrals;
  ints = IntegralSet::zeros(ns, ns, 0);

  if (basis == LatticeBasis::site) {
    ints.basis_label = "ssh-site";
    ints.h1 = hop.cast<cplx>();
    for (int i = 0; i < ns; ++i)
      ints.h2(i, i, i, i) = u;
    model.orbitals.coefficients = CMatrix::Identity(ns, ns);
    model.orbitals.energies = Eigen::VectorXd::Zero(ns);
    model.orbitals.overlap = RMatrix::Identity(ns, ns);
    model.orbitals.kmesh = ints.kmesh;
    model.orbitals.orb_k = ints.orb_k;
    return model;
  }

  ints.basis_label = "ssh-band";
  ints.kmesh = KMesh::line(ncell);
  CMatrix c = CMatrix::Zero(ns, ns);
  const double norm = 1.0 / std::sqrt(static_cast<double>(ncell));
  for (int m = 0; m < ncell; ++m) {
    const double theta = 2.0 * std::numbers::pi * m / ncell;
    CMatrix chi = CMatrix::Zero(ns, 2);
    for (int n = 0; n < ncell; ++n)
      for (int s = 0; s < 2; ++s)
        chi(2 * n + s, s) = norm * std::polar(1.0, theta * (n + 0.5 * s - 0.25));
    const CMatrix hk = chi.adjoint() * hop.cast<cplx>() * chi;
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hk);
    CMatrix uvec = es.eigenvectors();
    // Degenerate bands (zone boundary at t1 = t2): the solver's basis is a
    // rounding-noise mixture. Use the t2 -> t1 limit of the band vectors,
    // (1, -+i)/sqrt(2), which stay real up to a phase.
    const Eigen::Vector2d ek = es.eigenvalues();
    if (std::abs(ek(1) - ek(0)) <= 1e-12 * std::max(1.0, std::abs(ek(0)))) {
      const double h = std::sqrt(0.5);
      uvec << cplx(h, 0.0), cplx(h, 0.0), cplx(0.0, -h), cplx(0.0, h);
    }
    for (int b = 0; b < 2; ++b) {
      const int anchor = std::abs(uvec(0, b)) > 1e-12 ? 0 : 1;
      const cplx ph = std::abs(uvec(anchor, b)) > 0 ? std::conj(uvec(anchor, b)) / std::abs(uvec(anchor, b)) : 1.0;
      uvec.col(b) *= ph;
      c.col(2 * m + b) = chi * uvec.col(b);
      ints.orb_k[static_cast<std::size_t>(2 * m + b)] = m;
    }
  }
  const CMatrix h1 = c.adjoint() * hop.cast<cplx>() * c;
  for (int p = 0; p < ns; ++p)
    for (int q = 0; q < ns; ++q)
      ints.h1(p, q) = ints.one_body_allowed(p, q) ? h1(p, q) : cplx{};
  detail::hubbard_two_body(c, u, ints);

  const auto ref = aufbau_reference(ints);
  model.orbitals.coefficients = c;
  model.orbitals.energies = fock_matrix(ints, ref).diagonal().real();
  model.orbitals.overlap = RMatrix::Identity(ns, ns);
  model.orbitals.kmesh = ints.kmesh;
  model.orbitals.orb_k = ints.orb_k;
  return model;
}

inline IntegralSet build_ssh_hubbard(int ncell, double t1, double t2, double u, LatticeBasis basis) {
  return ssh_hubbard_model(ncell, t1, t2, u, basis).integrals;
}

/// Two-site Hubbard model with a single bond of hopping t, half filled.
inline IntegralSet build_hubbard_dimer(double t, double u) {
  auto ints = build_ssh_hubbard(1, t, 0.0, u, LatticeBasis::site);
  ints.basis_label = "hubbard-dimer";
  return ints;
}

} // namespace kvqe
