#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <tuple>
#include <vector>

#include "kvqe/integrals.hpp"
#include "kvqe/operators.hpp"

namespace kvqe {

enum class PoolKind { SD, GSD };
enum class ExcitationRank { single = 1, double_ = 2 };

inline const char *to_string(PoolKind k) { return k == PoolKind::SD ? "SD" : "GSD"; }

/// Anti-Hermitian, spin-adapted pool generator.
///
/// Singles (p,q): a+_pa a_qa + a+_pb a_qb - h.c.
/// Doubles (p,q -> r,s) come in two singlet combinations built from
/// E(r,p) E(s,q)-type products,
///   A: [2(aa,aa) + 2(bb,bb) + (aa,bb) + (bb,aa) + (ab,ba) + (ba,ab)] / sqrt(12)
///   B: [(aa,bb) + (bb,aa) - (ab,ba) - (ba,ab)] / 2
/// where (xy,zw) = a+_{r x} a_{p y} a+_{s z} a_{q w}. Every generator is
/// normalized to unit coefficient norm after anti-Hermitization.
struct PoolGenerator {
  int id = 0;
  FermionOperator tau;
  PauliSum pauli;
  ExcitationRank rank = ExcitationRank::single;
  KVector momentum_transfer{0.0, 0.0, 0.0};
  std::string label;
  /// single: {p, q, -1, -1} (creation p); double: {p, q, r, s} with p,q
  /// annihilated and r,s created.
  std::array<int, 4> spatial{-1, -1, -1, -1};
};

struct OperatorPool {
  std::vector<PoolGenerator> generators;
  /// Set when no generator survives (e.g. no virtual orbitals).
  bool degenerate = false;
  std::string note;

  [[nodiscard]] std::size_t size() const { return generators.size(); }
  [[nodiscard]] bool empty() const { return generators.empty(); }
  const PoolGenerator &operator[](std::size_t i) const { return generators[i]; }
  [[nodiscard]] auto begin() const { return generators.begin(); }
  [[nodiscard]] auto end() const { return generators.end(); }
};

struct PoolOptions {
  bool momentum_filter = true;
};

namespace detail {

/// Spin-summed single excitation E_pq = a+_pa a_qa + a+_pb a_qb.
inline FermionOperator singlet_single_excitation(int p, int q) {
  return excitation({spin_orbital(p, Spin::alpha)}, {spin_orbital(q, Spin::alpha)}) +
         excitation({spin_orbital(p, Spin::beta)}, {spin_orbital(q, Spin::beta)});
}

inline FermionOperator singlet_single(int p, int q) { return anti_hermitian(singlet_single_excitation(p, q)); }

inline FermionOperator ep_product(int r, Spin x, int p, Spin y, int s, Spin z, int q, Spin w, double c) {
  return FermionOperator::term(
      {cre(spin_orbital(r, x)), ann(spin_orbital(p, y)), cre(spin_orbital(s, z)), ann(spin_orbital(q, w))}, c);
}

/// The two singlet double excitations (A, B) for p,q -> r,s, before
/// anti-Hermitization.
inline std::pair<FermionOperator, FermionOperator> singlet_double_excitations(int p, int q, int r, int s) {
  constexpr Spin a = Spin::alpha, b = Spin::beta;
  const double c2 = 2.0 / std::sqrt(12.0), c1 = 1.0 / std::sqrt(12.0);
  FermionOperator ta = ep_product(r, a, p, a, s, a, q, a, c2) + ep_product(r, b, p, b, s, b, q, b, c2) +
                       ep_product(r, a, p, a, s, b, q, b, c1) + ep_product(r, b, p, b, s, a, q, a, c1) +
                       ep_product(r, a, p, b, s, b, q, a, c1) + ep_product(r, b, p, a, s, a, q, b, c1);
  FermionOperator tb = ep_product(r, a, p, a, s, b, q, b, 0.5) + ep_product(r, b, p, b, s, a, q, a, 0.5) +
                       ep_product(r, a, p, b, s, b, q, a, -0.5) + ep_product(r, b, p, a, s, a, q, b, -0.5);
  return {std::move(ta), std::move(tb)};
}

inline std::pair<FermionOperator, FermionOperator> singlet_doubles(int p, int q, int r, int s) {
  auto [ta, tb] = singlet_double_excitations(p, q, r, s);
  return {anti_hermitian(ta), anti_hermitian(tb)};
}

inline bool normalize_generator(FermionOperator &tau) {
  if (tau.empty())
    return false;
  tau *= 1.0 / std::sqrt(tau.coefficient_norm2());
  return true;
}

} // namespace detail

/// Spin-adapted UCC/ADAPT pool over spatial orbitals. SD excites occupied
/// into virtual orbitals of `reference`; GSD uses general index pairs
/// (p<=q), (r<=s) with pair(pq) <= pair(rs). With the momentum filter on,
/// only generators whose creations minus annihilations carry zero crystal
/// momentum (mod G) are kept. Ordering: rank, then spatial indices, then
/// label.
inline OperatorPool build_pool(const IntegralSet &ints, PoolKind kind, const ReferenceDeterminant &reference,
                               PoolOptions options = {}) {
  const int n = ints.norb;
  const int nq = ints.n_qubits();
  OperatorPool pool;
  std::vector<PoolGenerator> &gens = pool.generators;

  auto transfer = [&](std::initializer_list<int> created, std::initializer_list<int> annihilated) {
    std::vector<std::pair<int, bool>> f;
    for (int c : created)
      f.emplace_back(ints.orb_k[static_cast<std::size_t>(c)], true);
    for (int a : annihilated)
      f.emplace_back(ints.orb_k[static_cast<std::size_t>(a)], false);
    return momentum_transfer(f, ints.kmesh);
  };
  auto admit = [&](const KVector &k) { return !options.momentum_filter || is_reciprocal_lattice_vector(k); };

  auto add_single = [&](int p, int q) {
    const KVector k = transfer({p}, {q});
    if (!admit(k))
      return;
    PoolGenerator g;
    g.tau = detail::singlet_single(p, q);
    if (!detail::normalize_generator(g.tau))
      return;
    g.rank = ExcitationRank::single;
    g.momentum_transfer = k;
    g.label = "single";
    g.spatial = {p, q, -1, -1};
    gens.push_back(std::move(g));
  };
  auto add_doubles = [&](int p, int q, int r, int s) {
    const KVector k = transfer({r, s}, {p, q});
    if (!admit(k))
      return;
    auto [ta, tb] = detail::singlet_doubles(p, q, r, s);
    int variant = 0;
    for (FermionOperator *t : {&ta, &tb}) {
      const char *label = variant++ == 0 ? "double-a" : "double-b";
      if (!detail::normalize_generator(*t))
        continue;
      PoolGenerator g;
      g.tau = std::move(*t);
      g.rank = ExcitationRank::double_;
      g.momentum_transfer = k;
      g.label = label;
      g.spatial = {p, q, r, s};
      gens.push_back(std::move(g));
    }
  };

  if (kind == PoolKind::SD) {
    std::vector<int> occ, vir;
    const auto occ_a = reference.spatial_occupied(Spin::alpha);
    const auto occ_b = reference.spatial_occupied(Spin::beta);
    for (int p = 0; p < n; ++p) {
      const bool ia = std::count(occ_a.begin(), occ_a.end(), p) > 0;
      const bool ib = std::count(occ_b.begin(), occ_b.end(), p) > 0;
      if (ia || ib)
        occ.push_back(p);
      if (!ia || !ib)
        vir.push_back(p);
    }
    for (int i : occ)
      for (int a : vir)
        add_single(a, i);
    for (std::size_t x = 0; x < occ.size(); ++x)
      for (std::size_t y = x; y < occ.size(); ++y)
        for (std::size_t u = 0; u < vir.size(); ++u)
          for (std::size_t v = u; v < vir.size(); ++v)
            add_doubles(occ[x], occ[y], vir[u], vir[v]);
  } else {
    for (int p = 0; p < n; ++p)
      for (int q = p; q < n; ++q)
        add_single(p, q);
    std::vector<std::pair<int, int>> pairs;
    for (int p = 0; p < n; ++p)
      for (int q = p; q < n; ++q)
        pairs.emplace_back(p, q);
    for (std::size_t i = 0; i < pairs.size(); ++i)
      for (std::size_t j = i; j < pairs.size(); ++j)
        add_doubles(pairs[i].first, pairs[i].second, pairs[j].first, pairs[j].second);
  }

  std::stable_sort(gens.begin(), gens.end(), [](const PoolGenerator &a, const PoolGenerator &b) {
    return std::tie(a.rank, a.spatial, a.label) < std::tie(b.rank, b.spatial, b.label);
  });
  for (std::size_t i = 0; i < gens.size(); ++i) {
    gens[i].id = static_cast<int>(i);
    gens[i].pauli = jordan_wigner(gens[i].tau, nq);
  }
  if (gens.empty()) {
    pool.degenerate = true;
    pool.note = std::string("empty ") + to_string(kind) + " pool: no admissible excitations";
  }
  return pool;
}

} // namespace kvqe
