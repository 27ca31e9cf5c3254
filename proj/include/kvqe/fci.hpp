#pragma once

#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kvqe/hamiltonian.hpp"
#include "kvqe/sparse.hpp"
#include "kvqe/state.hpp"

namespace kvqe {

inline constexpr std::size_t kDenseSectorLimit = 4096;

struct SpectrumResult {
  std::vector<double> energies; // ascending
  std::vector<StateVector> states;
  int nelec = 0;
  int ms2 = 0;
  std::vector<std::string> warnings;
};

namespace detail {

/// Block Davidson for the lowest `k` eigenpairs of a Hermitian sparse matrix.
/// Convergence is on residual norms.
inline void davidson(const Eigen::SparseMatrix<cplx, Eigen::RowMajor> &h, int k, double tol,
                     Eigen::VectorXd &evals, Eigen::MatrixXcd &evecs, std::vector<std::string> &warnings) {
  using Eigen::Index;
  using Eigen::MatrixXcd;
  using Eigen::VectorXcd;
  const Index n = h.rows();
  const Eigen::VectorXd diag = h.diagonal().real();
  const Index block = std::min<Index>(n, std::max<Index>(2 * k, k + 4));
  const Index max_sub = std::min<Index>(n, std::max<Index>(8 * block, 60));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return diag(a) < diag(b); });
  MatrixXcd v = MatrixXcd::Zero(n, block);
  for (Index j = 0; j < block; ++j) {
    v(order[static_cast<std::size_t>(j)], j) = 1.0;
    // Small deterministic perturbation breaks symmetry-induced stagnation.
    for (Index i = 0; i < n; ++i)
      v(i, j) += 1e-3 * std::sin(0.7 * static_cast<double>(i + 1) * static_cast<double>(j + 1));
  }

  auto orthonormalize = [](MatrixXcd &m, Index keep_from) {
    Index cols = 0;
    for (Index j = 0; j < m.cols(); ++j) {
      VectorXcd c = m.col(j);
      for (int pass = 0; pass < 2; ++pass)
        for (Index i = 0; i < cols; ++i)
          c -= m.col(i).dot(c) * m.col(i);
      const double nrm = c.norm();
      if (nrm < 1e-10 && j >= keep_from)
        continue;
      m.col(cols++) = c / nrm;
    }
    m.conservativeResize(Eigen::NoChange, cols);
  };
  orthonormalize(v, 0);

  for (int iter = 0; iter < 2000; ++iter) {
    const MatrixXcd w = h * v;
    MatrixXcd t = v.adjoint() * w;
    t = 0.5 * (t + t.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(t);
    const Index m = std::min<Index>(k, t.rows());
    const MatrixXcd y = es.eigenvectors().leftCols(m);
    const MatrixXcd x = v * y;
    const MatrixXcd r = w * y - x * es.eigenvalues().head(m).asDiagonal();
    double worst = 0.0;
    for (Index j = 0; j < m; ++j)
      worst = std::max(worst, r.col(j).norm());
    if (worst <= tol) {
      evals = es.eigenvalues().head(m);
      evecs = x;
      return;
    }
    MatrixXcd corr(n, m);
    Index nc = 0;
    for (Index j = 0; j < m; ++j) {
      if (r.col(j).norm() <= tol)
        continue;
      VectorXcd c(n);
      for (Index i = 0; i < n; ++i) {
        double den = es.eigenvalues()(j) - diag(i);
        if (std::abs(den) < 1e-8)
          den = den < 0 ? -1e-8 : 1e-8;
        c(i) = r(i, j) / den;
      }
      corr.col(nc++) = c;
    }
    corr.conservativeResize(Eigen::NoChange, nc);
    if (v.cols() + nc > max_sub) {
      const Index keep = std::min<Index>(t.rows(), block);
      v = v * es.eigenvectors().leftCols(keep);
    }
    const Index old = v.cols();
    v.conservativeResize(Eigen::NoChange, old + nc);
    v.rightCols(nc) = corr;
    orthonormalize(v, old);
    if (v.cols() == old) {
      warnings.push_back("Davidson stagnated; residual " + std::to_string(worst));
      evals = es.eigenvalues().head(m);
      evecs = x;
      return;
    }
  }
  throw NumericalError("Davidson did not converge");
}

} // namespace detail

/// Lowest eigenpairs of H within the (nelec, ms2) sector. Dense solve up to
/// 4096 sector states, Davidson with residual tolerance 1e-9 above.
inline SpectrumResult fci(const SparseOperator &h, const Sector &sector, int nelec, int ms2, int n_states = 1) {
  if (sector.size() == 0)
    throw InvalidInput("empty symmetry sector");
  if (n_states < 1)
    throw InvalidInput("n_states must be >= 1");
  SpectrumResult res;
  res.nelec = nelec;
  res.ms2 = ms2;
  int k = n_states;
  if (static_cast<std::size_t>(k) > sector.size()) {
    res.warnings.push_back("requested " + std::to_string(k) + " states, sector has " +
                           std::to_string(sector.size()));
    k = static_cast<int>(sector.size());
  }
  Eigen::VectorXd evals;
  Eigen::MatrixXcd evecs;
  if (sector.size() <= kDenseSectorLimit) {
    Eigen::MatrixXcd m = h.sector_matrix(sector);
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    evals = es.eigenvalues().head(k);
    evecs = es.eigenvectors().leftCols(k);
  } else {
    detail::davidson(h.sector_sparse(sector), k, 1e-9, evals, evecs, res.warnings);
  }
  for (Eigen::Index j = 0; j < evals.size(); ++j) {
    res.energies.push_back(evals(j));
    StateVector s(sector.n_qubits);
    auto amp = s.amplitudes();
    for (std::size_t i = 0; i < sector.size(); ++i)
      amp[sector.states[i]] = evecs(static_cast<Eigen::Index>(i), j);
    res.states.push_back(std::move(s));
  }
  return res;
}

inline SpectrumResult fci(const PauliSum &h, int nelec, int ms2, int n_states = 1) {
  if (!h.is_hermitian(1e-10))
    throw InvalidInput("Hamiltonian is not Hermitian");
  const Sector sector = Sector::particles(h.n_qubits(), nelec, ms2);
  return fci(SparseOperator::from_pauli(h, sector), sector, nelec, ms2, n_states);
}

inline SpectrumResult fci(const IntegralSet &ints, int n_states = 1) {
  const Sector sector = Sector::particles(ints.n_qubits(), ints.nelec, ints.ms2);
  return fci(SparseOperator::from_fermion(build_hamiltonian(ints), sector), sector, ints.nelec, ints.ms2,
             n_states);
}

} // namespace kvqe
