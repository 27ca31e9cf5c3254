#pragma once

// Dense reference constructions used as oracles. They deliberately avoid the
// library's sparse compilation and Jordan-Wigner code paths.

#include <bit>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "kvqe/kvqe.hpp"

namespace kvqe::testing {

using Eigen::MatrixXcd;

/// Kronecker-product image of a Pauli sum; qubit 0 is the least significant
/// index bit.
inline MatrixXcd dense_pauli(const PauliSum &op) {
  const int n = op.n_qubits();
  MatrixXcd I = MatrixXcd::Identity(2, 2), X(2, 2), Y(2, 2), Z(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, cplx(0, -1), cplx(0, 1), 0;
  Z << 1, 0, 0, -1;
  const auto dim = Eigen::Index{1} << n;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (const auto &[p, c] : op.terms()) {
    MatrixXcd m = MatrixXcd::Identity(1, 1);
    for (int q = 0; q < n; ++q) {
      const MatrixXcd &l = p.letter(q) == 'X' ? X : p.letter(q) == 'Y' ? Y : p.letter(q) == 'Z' ? Z : I;
      MatrixXcd next = Eigen::kroneckerProduct(l, m);
      m = next;
    }
    out += c * m;
  }
  return out;
}

/// Matrix of a single ladder operator from its defining action on
/// occupation-number states.
inline MatrixXcd dense_ladder(int mode, bool dagger, int n) {
  const auto dim = Eigen::Index{1} << n;
  MatrixXcd m = MatrixXcd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    const bool occ = (b >> mode) & 1;
    if (occ == dagger)
      continue;
    int parity = 0;
    for (int j = 0; j < mode; ++j)
      parity += (b >> j) & 1;
    m(b ^ (Eigen::Index{1} << mode), b) = (parity % 2) ? -1.0 : 1.0;
  }
  return m;
}

inline MatrixXcd dense_fermion(const FermionOperator &op, int n) {
  const auto dim = Eigen::Index{1} << n;
  MatrixXcd out = MatrixXcd::Zero(dim, dim);
  for (const auto &[t, c] : op.terms())
    for (Eigen::Index col = 0; col < dim; ++col) {
      Eigen::Index b = col;
      double sign = 1.0;
      bool alive = true;
      for (auto it = t.rbegin(); alive && it != t.rend(); ++it) {
        const bool occ = (b >> it->mode) & 1;
        if (occ == it->dagger) {
          alive = false;
          break;
        }
        int parity = 0;
        for (int j = 0; j < it->mode; ++j)
          parity += (b >> j) & 1;
        if (parity % 2)
          sign = -sign;
        b ^= Eigen::Index{1} << it->mode;
      }
      if (alive)
        out(b, col) += c * sign;
    }
  return out;
}

inline double max_abs(const MatrixXcd &m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

inline Eigen::VectorXcd to_eigen(const StateVector &s) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(s.dim()));
  for (std::size_t i = 0; i < s.dim(); ++i)
    v(static_cast<Eigen::Index>(i)) = s[i];
  return v;
}

inline StateVector from_eigen(const Eigen::VectorXcd &v, int n) {
  std::vector<cplx> a(v.data(), v.data() + v.size());
  return StateVector(n, std::move(a));
}

/// exp(A) v through a full eigendecomposition of the anti-Hermitian A.
inline Eigen::VectorXcd dense_expm_apply(const MatrixXcd &anti_hermitian, const Eigen::VectorXcd &v) {
  const MatrixXcd h = cplx(0, 1) * anti_hermitian; // Hermitian
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(h);
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(cplx(0, -es.eigenvalues()(i)));
  return es.eigenvectors() * phases.asDiagonal() * (es.eigenvectors().adjoint() * v);
}

/// Lowest eigenvalues of H restricted to fixed (N, 2Sz) by explicit masking
/// of the dense matrix.
inline Eigen::VectorXd dense_sector_spectrum(const MatrixXcd &h, int n, int nelec, int ms2) {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index b = 0; b < (Eigen::Index{1} << n); ++b) {
    int na = 0, nb = 0;
    for (int q = 0; q < n; ++q)
      if ((b >> q) & 1)
        (q % 2 ? nb : na)++;
    if (na + nb == nelec && na - nb == ms2)
      idx.push_back(b);
  }
  MatrixXcd sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j)
      sub(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = h(idx[i], idx[j]);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(sub, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline std::vector<double> random_params(std::size_t n, unsigned seed, double lo = -0.5, double hi = 0.5) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto &x : v)
    x = dist(rng);
  return v;
}

/// Random Hermitian integrals with the electron-exchange symmetry; elements
/// forbidden by crystal momentum are exactly zero.
inline IntegralSet random_integrals(int norb, int nelec, const KMesh &mesh, std::vector<int> orb_k, unsigned seed,
                                    bool real = false) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  auto draw = [&]() { return real ? cplx(g(rng), 0.0) : cplx(g(rng), g(rng)); };
  IntegralSet ints = IntegralSet::zeros(norb, nelec);
  ints.kmesh = mesh;
  ints.orb_k = std::move(orb_k);
  ints.ecore = 0.25;
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q < norb; ++q)
      if (ints.one_body_allowed(p, q))
        ints.h1(p, q) = draw();
  ints.h1 = (0.5 * (ints.h1 + ints.h1.adjoint())).eval();
  TwoBodyTensor raw(norb);
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q < norb; ++q)
      for (int r = 0; r < norb; ++r)
        for (int s = 0; s < norb; ++s)
          if (ints.two_body_allowed(p, q, r, s))
            raw(p, q, r, s) = draw();
  for (int p = 0; p < norb; ++p)
    for (int q = 0; q < norb; ++q)
      for (int r = 0; r < norb; ++r)
        for (int s = 0; s < norb; ++s)
          ints.h2(p, q, r, s) = 0.25 * (raw(p, q, r, s) + raw(q, p, s, r) + std::conj(raw(s, r, q, p)) +
                                        std::conj(raw(r, s, p, q)));
  return ints;
}

} // namespace kvqe::testing
