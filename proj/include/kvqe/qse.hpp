#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "kvqe/pool.hpp"
#include "kvqe/vqe.hpp"

namespace kvqe {

/// SD: excitations from occupied into virtual orbitals of the reference.
/// full_SD: general one- and two-body excitations.
enum class QseTruncation { SD, full_SD };

inline const char *to_string(QseTruncation t) { return t == QseTruncation::SD ? "SD" : "full-SD"; }

struct QseOptions {
  QseTruncation truncation = QseTruncation::SD;
  bool spin_adapted = false;
  bool momentum_filter = true;
  double threshold = 1e-8; // canonical orthogonalization cutoff on S eigenvalues
};

/// Expansion operators T_u; index 0 is always the identity.
struct QseSpace {
  std::vector<FermionOperator> operators;
  std::vector<std::string> labels;

  [[nodiscard]] std::size_t size() const { return operators.size(); }
};

struct QseResult {
  CMatrix h, s;
  std::vector<double> energies; // ascending
  CMatrix coefficients;         // columns: eigenvectors in the T_u basis
  int retained = 0;
};

/// Builds the QSE expansion space. Spin-orbital excitations are kept when
/// they conserve S_z; with the momentum filter, only excitations carrying
/// zero crystal momentum (mod G) are kept.
inline QseSpace qse_space(const IntegralSet &ints, const ReferenceDeterminant &ref, const QseOptions &opt = {}) {
  QseSpace sp;
  sp.operators.push_back(FermionOperator::identity());
  sp.labels.push_back("I");
  const int nq = ints.n_qubits();
  auto k_ok = [&](std::initializer_list<int> cre_modes, std::initializer_list<int> ann_modes, bool spatial) {
    if (!opt.momentum_filter)
      return true;
    std::vector<std::pair<int, bool>> f;
    for (int m : cre_modes)
      f.emplace_back(ints.orb_k[static_cast<std::size_t>(spatial ? m : m / 2)], true);
    for (int m : ann_modes)
      f.emplace_back(ints.orb_k[static_cast<std::size_t>(spatial ? m : m / 2)], false);
    return momentum_conserved(f, ints.kmesh);
  };
  auto add = [&](FermionOperator t, std::string label) {
    if (t.empty())
      return;
    sp.operators.push_back(std::move(t));
    sp.labels.push_back(std::move(label));
  };
  const bool sd = opt.truncation == QseTruncation::SD;

  if (!opt.spin_adapted) {
    std::vector<int> occ, vir, all;
    for (int q = 0; q < nq; ++q) {
      (ref.is_occupied(q) ? occ : vir).push_back(q);
      all.push_back(q);
    }
    const auto &from = sd ? occ : all;
    const auto &to = sd ? vir : all;
    for (int i : from)
      for (int a : to)
        if (a != i && a % 2 == i % 2 && k_ok({a}, {i}, false))
          add(excitation({a}, {i}), "E" + std::to_string(a) + "," + std::to_string(i));
    for (std::size_t x = 0; x < from.size(); ++x)
      for (std::size_t y = x + 1; y < from.size(); ++y)
        for (std::size_t u = 0; u < to.size(); ++u)
          for (std::size_t v = u + 1; v < to.size(); ++v) {
            const int i = from[x], j = from[y], a = to[u], b = to[v];
            if (!sd && a == i && b == j)
              continue;
            if ((a % 2) + (b % 2) != (i % 2) + (j % 2))
              continue;
            if (!k_ok({a, b}, {i, j}, false))
              continue;
            add(excitation({a, b}, {j, i}),
                "E" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(j) + "," +
                    std::to_string(i));
          }
    return sp;
  }

  std::vector<int> occ, vir, all;
  const auto occ_a = ref.spatial_occupied(Spin::alpha);
  const auto occ_b = ref.spatial_occupied(Spin::beta);
  for (int p = 0; p < ints.norb; ++p) {
    const bool ia = std::count(occ_a.begin(), occ_a.end(), p) > 0;
    const bool ib = std::count(occ_b.begin(), occ_b.end(), p) > 0;
    if (ia || ib)
      occ.push_back(p);
    if (!ia || !ib)
      vir.push_back(p);
    all.push_back(p);
  }
  const auto &from = sd ? occ : all;
  const auto &to = sd ? vir : all;
  for (int i : from)
    for (int a : to)
      if (a != i && k_ok({a}, {i}, true))
        add(detail::singlet_single_excitation(a, i), "S" + std::to_string(a) + "," + std::to_string(i));
  for (std::size_t x = 0; x < from.size(); ++x)
    for (std::size_t y = x; y < from.size(); ++y)
      for (std::size_t u = 0; u < to.size(); ++u)
        for (std::size_t v = u; v < to.size(); ++v) {
          const int i = from[x], j = from[y], a = to[u], b = to[v];
          if (!sd && a == i && b == j)
            continue;
          if (!k_ok({a, b}, {i, j}, true))
            continue;
          auto [ta, tb] = detail::singlet_double_excitations(i, j, a, b);
          const std::string tag = std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(i) + "," +
                                  std::to_string(j);
          add(std::move(ta), "DA" + tag);
          add(std::move(tb), "DB" + tag);
        }
  return sp;
}

/// H_uv = <T_u psi|H|T_v psi>, S_uv = <T_u psi|T_v psi> on sector coordinates.
inline std::pair<CMatrix, CMatrix> qse_matrices(const VectorXcd &psi, const CompactOperator &h,
                                                std::span<const CompactOperator> ops) {
  const auto n = static_cast<Eigen::Index>(ops.size());
  CMatrix v(psi.size(), n);
  parallel_for(
      ops.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t u = b; u < e; ++u)
          v.col(static_cast<Eigen::Index>(u)) = ops[u].matrix * psi;
      },
      16);
  CMatrix hv(psi.size(), n);
  parallel_for(
      ops.size(),
      [&](std::size_t b, std::size_t e) {
        for (std::size_t u = b; u < e; ++u)
          hv.col(static_cast<Eigen::Index>(u)) = h.matrix * v.col(static_cast<Eigen::Index>(u));
      },
      16);
  return {v.adjoint() * hv, v.adjoint() * v};
}

inline std::vector<CompactOperator> compile_space(const QseSpace &space, const Sector &sector) {
  std::vector<CompactOperator> out;
  out.reserve(space.size());
  for (const auto &t : space.operators)
    out.push_back(CompactOperator::from(t, sector));
  return out;
}

/// Generalized eigenproblem H c = E S c by canonical orthogonalization:
/// S eigenvectors with eigenvalue below `threshold` are dropped.
inline QseResult solve_pencil(const CMatrix &h, const CMatrix &s, double threshold = 1e-8) {
  if (h.rows() != h.cols() || s.rows() != s.cols() || h.rows() != s.rows())
    throw InvalidInput("QSE matrices have mismatched dimensions");
  QseResult res;
  res.h = h;
  res.s = s;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (s + s.adjoint()));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()(i) > threshold)
      keep.push_back(i);
  if (keep.empty())
    throw NumericalError("QSE overlap matrix has no eigenvalue above the threshold");
  CMatrix x(s.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j)
    x.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) / std::sqrt(es.eigenvalues()(keep[j]));
  CMatrix hr = x.adjoint() * h * x;
  hr = 0.5 * (hr + hr.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> eh(hr);
  res.retained = static_cast<int>(keep.size());
  res.energies.assign(eh.eigenvalues().data(), eh.eigenvalues().data() + eh.eigenvalues().size());
  res.coefficients = x * eh.eigenvectors();
  return res;
}

/// The lowest n pencil solutions as (energy, coefficient vector) pairs.
inline std::vector<std::pair<double, VectorXcd>> excited_states(const QseResult &r, int n) {
  if (n < 0 || n > r.retained)
    throw InvalidInput("requested " + std::to_string(n) + " QSE states, " + std::to_string(r.retained) +
                       " retained");
  std::vector<std::pair<double, VectorXcd>> out;
  for (int i = 0; i < n; ++i)
    out.emplace_back(r.energies[static_cast<std::size_t>(i)], r.coefficients.col(i));
  return out;
}

/// QSE on a prepared state: build the space, compile it on the system's
/// sector, and solve the pencil.
inline QseResult run_qse(const VqeSystem &sys, const IntegralSet &ints, const VectorXcd &psi,
                         const QseOptions &opt = {}) {
  const QseSpace space = qse_space(ints, sys.reference, opt);
  const auto ops = compile_space(space, sys.sector);
  const auto [h, s] = qse_matrices(psi, sys.h, ops);
  return solve_pencil(h, s, opt.threshold);
}

} // namespace kvqe
