#pragma once

#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kvqe/common.hpp"
#include "kvqe/operators.hpp"

namespace kvqe {

using KVector = std::array<double, 3>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

inline constexpr double kMomentumTolerance = 1e-8;

/// Fractional k-points in [0,1)^3.
struct KMesh {
  std::vector<KVector> points;

  [[nodiscard]] int nkpt() const { return static_cast<int>(points.size()); }

  static KMesh gamma() { return KMesh{{KVector{0.0, 0.0, 0.0}}}; }

  /// n uniformly spaced points along the first axis: 0, 1/n, ..., (n-1)/n.
  static KMesh line(int n) {
    KMesh m;
    for (int i = 0; i < n; ++i)
      m.points.push_back({static_cast<double>(i) / n, 0.0, 0.0});
    return m;
  }

  /// Index of the point congruent to -k (mod 1), if present.
  [[nodiscard]] std::optional<int> negation_partner(int k, double tol = kMomentumTolerance) const {
    for (int j = 0; j < nkpt(); ++j) {
      bool match = true;
      for (int d = 0; d < 3; ++d)
        match = match && close_to_integer(points[k][d] + points[j][d], tol);
      if (match)
        return j;
    }
    return std::nullopt;
  }

  void validate() const {
    if (points.empty())
      throw InvalidInput("k-mesh is empty");
    for (std::size_t i = 0; i < points.size(); ++i) {
      for (double c : points[i])
        if (!(c >= 0.0 && c < 1.0))
          throw InvalidInput("k-point " + std::to_string(i + 1) + " has a coordinate outside [0,1)");
      for (std::size_t j = 0; j < i; ++j) {
        bool same = true;
        for (int d = 0; d < 3; ++d)
          same = same && close_to_integer(points[i][d] - points[j][d], kMomentumTolerance);
        if (same)
          throw InvalidInput("k-points " + std::to_string(j + 1) + " and " + std::to_string(i + 1) +
                             " coincide");
      }
    }
  }
};

/// Signed sum of k over creations minus annihilations.
inline KVector momentum_transfer(std::span<const std::pair<int, bool>> factors, const KMesh &mesh) {
  KVector sum{0.0, 0.0, 0.0};
  for (const auto &[k, dagger] : factors)
    for (int d = 0; d < 3; ++d)
      sum[d] += dagger ? mesh.points.at(static_cast<std::size_t>(k))[d]
                       : -mesh.points.at(static_cast<std::size_t>(k))[d];
  return sum;
}

inline bool is_reciprocal_lattice_vector(const KVector &v, double tol = kMomentumTolerance) {
  return close_to_integer(v[0], tol) && close_to_integer(v[1], tol) && close_to_integer(v[2], tol);
}

/// True when the k-indices of creations minus annihilations sum to a
/// reciprocal lattice vector (componentwise integer within 1e-8).
inline bool momentum_conserved(std::span<const std::pair<int, bool>> factors, const KMesh &mesh) {
  return is_reciprocal_lattice_vector(momentum_transfer(factors, mesh));
}

/// Dense 4-index array h^{pq}_{rs} with p,s on electron 1 and q,r on
/// electron 2:
///   h^{pq}_{rs} = \int phi_p^*(1) phi_q^*(2) r12^{-1} phi_r(2) phi_s(1).
class TwoBodyTensor {
public:
  TwoBodyTensor() = default;
  explicit TwoBodyTensor(int n) : n_(n), data_(static_cast<std::size_t>(n) * n * n * n) {}

  [[nodiscard]] int dim() const { return n_; }
  cplx &operator()(int p, int q, int r, int s) { return data_[index(p, q, r, s)]; }
  const cplx &operator()(int p, int q, int r, int s) const { return data_[index(p, q, r, s)]; }
  [[nodiscard]] std::span<cplx> data() { return data_; }
  [[nodiscard]] std::span<const cplx> data() const { return data_; }

private:
  [[nodiscard]] std::size_t index(int p, int q, int r, int s) const {
    return ((static_cast<std::size_t>(p) * n_ + q) * n_ + r) * n_ + s;
  }
  int n_ = 0;
  std::vector<cplx> data_;
};

/// Spin-restricted one- and two-electron integrals over spatial orbitals, in
/// Hartree. Orbital p carries crystal momentum kmesh.points[orb_k[p]].
struct IntegralSet {
  int norb = 0;
  int nelec = 0;
  int ms2 = 0;
  KMesh kmesh = KMesh::gamma();
  std::vector<int> orb_k;
  CMatrix h1;
  TwoBodyTensor h2;
  double ecore = 0.0;
  std::string basis_label;

  static IntegralSet zeros(int norb, int nelec, int ms2 = 0) {
    IntegralSet s;
    s.norb = norb;
    s.nelec = nelec;
    s.ms2 = ms2;
    s.orb_k.assign(static_cast<std::size_t>(norb), 0);
    s.h1 = CMatrix::Zero(norb, norb);
    s.h2 = TwoBodyTensor(norb);
    return s;
  }

  [[nodiscard]] int n_qubits() const { return 2 * norb; }

  [[nodiscard]] bool one_body_allowed(int p, int q) const {
    const std::pair<int, bool> f[] = {{orb_k[p], true}, {orb_k[q], false}};
    return momentum_conserved(f, kmesh);
  }
  [[nodiscard]] bool two_body_allowed(int p, int q, int r, int s) const {
    const std::pair<int, bool> f[] = {{orb_k[p], true}, {orb_k[q], true}, {orb_k[r], false}, {orb_k[s], false}};
    return momentum_conserved(f, kmesh);
  }

  [[nodiscard]] double max_hermiticity_violation() const {
    double m = (h1 - h1.adjoint()).cwiseAbs().maxCoeff();
    for (int p = 0; p < norb; ++p)
      for (int q = 0; q < norb; ++q)
        for (int r = 0; r < norb; ++r)
          for (int s = 0; s < norb; ++s)
            m = std::max(m, std::abs(h2(p, q, r, s) - std::conj(h2(s, r, q, p))));
    return m;
  }

  [[nodiscard]] double max_imaginary() const {
    double m = h1.imag().cwiseAbs().maxCoeff();
    for (const auto &v : h2.data())
      m = std::max(m, std::abs(v.imag()));
    return m;
  }

  /// Throws InvalidInput on the first broken invariant.
  void validate(double hermiticity_tol = 1e-8) const {
    if (norb <= 0)
      throw InvalidInput("NORB must be positive");
    if (nelec < 0 || nelec > 2 * norb)
      throw InvalidInput("NELEC outside [0, 2*NORB]");
    if ((nelec + ms2) % 2 != 0 || std::abs(ms2) > nelec)
      throw InvalidInput("MS2 inconsistent with NELEC");
    kmesh.validate();
    if (static_cast<int>(orb_k.size()) != norb)
      throw InvalidInput("orbital k assignment has wrong length");
    for (int k : orb_k)
      if (k < 0 || k >= kmesh.nkpt())
        throw InvalidInput("orbital k index out of range");
    if (h1.rows() != norb || h1.cols() != norb || h2.dim() != norb)
      throw InvalidInput("integral array dimensions do not match NORB");
    if (double v = max_hermiticity_violation(); v > hermiticity_tol)
      throw InvalidInput("integrals violate Hermiticity by " + std::to_string(v));
    for (int p = 0; p < norb; ++p)
      for (int q = 0; q < norb; ++q) {
        if (h1(p, q) != cplx{} && !one_body_allowed(p, q))
          throw InvalidInput("one-body integral (" + std::to_string(p + 1) + "," + std::to_string(q + 1) +
                             ") violates crystal momentum conservation");
        for (int r = 0; r < norb; ++r)
          for (int s = 0; s < norb; ++s)
            if (h2(p, q, r, s) != cplx{} && !two_body_allowed(p, q, r, s))
              throw InvalidInput("two-body integral (" + std::to_string(p + 1) + "," + std::to_string(q + 1) +
                                 "," + std::to_string(r + 1) + "," + std::to_string(s + 1) +
                                 ") violates crystal momentum conservation");
      }
  }
};

/// Occupied spin orbitals (qubit indices, ascending) of a single determinant.
struct ReferenceDeterminant {
  std::vector<int> occupied;
  KVector momentum{0.0, 0.0, 0.0};

  [[nodiscard]] bool is_occupied(int qubit) const {
    return std::find(occupied.begin(), occupied.end(), qubit) != occupied.end();
  }

  [[nodiscard]] std::uint64_t bitstring() const {
    std::uint64_t b = 0;
    for (int q : occupied)
      b |= std::uint64_t{1} << q;
    return b;
  }

  /// Spatial orbitals occupied in spin s.
  [[nodiscard]] std::vector<int> spatial_occupied(Spin s) const {
    std::vector<int> out;
    for (int q : occupied)
      if ((q % 2 == 1) == (s == Spin::beta))
        out.push_back(q / 2);
    return out;
  }

  static ReferenceDeterminant from_spatial(const std::vector<int> &alpha, const std::vector<int> &beta,
                                           const IntegralSet &ints) {
    ReferenceDeterminant d;
    for (int p : alpha)
      d.occupied.push_back(spin_orbital(p, Spin::alpha));
    for (int p : beta)
      d.occupied.push_back(spin_orbital(p, Spin::beta));
    std::sort(d.occupied.begin(), d.occupied.end());
    for (int q : d.occupied) {
      if (q < 0 || q >= ints.n_qubits())
        throw InvalidInput("reference occupies an orbital outside the basis");
      for (int dd = 0; dd < 3; ++dd)
        d.momentum[dd] += ints.kmesh.points[ints.orb_k[q / 2]][dd];
    }
    for (double &c : d.momentum)
      c -= std::floor(c + 1e-9);
    return d;
  }
};

/// Spin-sigma Fock matrix of a determinant:
///   f_pq = h_pq + sum_{j occ, any spin} h^{pj}_{jq} - sum_{j occ, spin sigma} h^{pj}_{qj}.
inline CMatrix fock_matrix(const IntegralSet &ints, const ReferenceDeterminant &ref, Spin sigma = Spin::alpha) {
  const int n = ints.norb;
  CMatrix f = ints.h1;
  const auto occ_a = ref.spatial_occupied(Spin::alpha);
  const auto occ_b = ref.spatial_occupied(Spin::beta);
  const auto &same = (sigma == Spin::alpha) ? occ_a : occ_b;
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      cplx v{};
      for (int j : occ_a)
        v += ints.h2(p, j, j, q);
      for (int j : occ_b)
        v += ints.h2(p, j, j, q);
      for (int j : same)
        v -= ints.h2(p, j, q, j);
      f(p, q) += v;
    }
  return f;
}

/// Determinant energy from the Slater-Condon rules, independent of any
/// operator or state machinery.
inline double reference_energy(const IntegralSet &ints, const ReferenceDeterminant &ref) {
  cplx e = ints.ecore;
  for (int a : ref.occupied)
    e += ints.h1(a / 2, a / 2);
  for (int a : ref.occupied)
    for (int b : ref.occupied) {
      const int i = a / 2, j = b / 2;
      e += 0.5 * ints.h2(i, j, j, i);
      if (a % 2 == b % 2)
        e -= 0.5 * ints.h2(i, j, i, j);
    }
  return e.real();
}

/// Aufbau determinant: fill the lowest Fock eigen-energies (diagonal) of each
/// spin, iterating the occupation until it is self-consistent. Ties go to the
/// lower orbital index.
inline ReferenceDeterminant aufbau_reference(const IntegralSet &ints, int max_iter = 50) {
  const int n = ints.norb;
  const int na = (ints.nelec + ints.ms2) / 2;
  const int nb = (ints.nelec - ints.ms2) / 2;
  auto pick = [n](const Eigen::VectorXd &eps, int count) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return eps[a] < eps[b] - 1e-10; });
    std::vector<int> out(idx.begin(), idx.begin() + count);
    std::sort(out.begin(), out.end());
    return out;
  };
  Eigen::VectorXd diag = ints.h1.diagonal().real();
  auto ref = ReferenceDeterminant::from_spatial(pick(diag, na), pick(diag, nb), ints);
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd fa = fock_matrix(ints, ref, Spin::alpha).diagonal().real();
    const Eigen::VectorXd fb = fock_matrix(ints, ref, Spin::beta).diagonal().real();
    auto next = ReferenceDeterminant::from_spatial(pick(fa, na), pick(fb, nb), ints);
    if (next.occupied == ref.occupied)
      break;
    ref = std::move(next);
  }
  return ref;
}

} // namespace kvqe
