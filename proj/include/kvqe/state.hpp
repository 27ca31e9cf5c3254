#pragma once

#include <bit>
#include <map>
#include <span>
#include <vector>

#include "kvqe/integrals.hpp"
#include "kvqe/pool.hpp"
#include "kvqe/sparse.hpp"

namespace kvqe {

/// Dense amplitude vector over 2^n computational basis states; bit q of the
/// index is the occupation of qubit q.
class StateVector {
public:
  StateVector() = default;
  explicit StateVector(int n_qubits) : n_qubits_(n_qubits) {
    Sector::check_size(n_qubits);
    amp_.assign(std::size_t{1} << n_qubits, cplx{});
  }
  StateVector(int n_qubits, std::vector<cplx> amplitudes) : n_qubits_(n_qubits), amp_(std::move(amplitudes)) {
    Sector::check_size(n_qubits);
    if (amp_.size() != (std::size_t{1} << n_qubits))
      throw InvalidInput("amplitude count is not 2^n_qubits");
  }

  static StateVector basis(int n_qubits, std::uint64_t index) {
    StateVector s(n_qubits);
    s.amp_.at(index) = 1.0;
    return s;
  }

  [[nodiscard]] int n_qubits() const { return n_qubits_; }
  [[nodiscard]] std::size_t dim() const { return amp_.size(); }
  [[nodiscard]] std::span<const cplx> amplitudes() const { return amp_; }
  [[nodiscard]] std::span<cplx> amplitudes() { return amp_; }
  cplx operator[](std::size_t i) const { return amp_[i]; }

  [[nodiscard]] double norm() const { return vector_norm(amp_); }

  [[nodiscard]] StateVector normalized() const {
    StateVector s = *this;
    const double n = norm();
    if (n == 0.0)
      throw NumericalError("cannot normalize a zero state");
    for (auto &a : s.amp_)
      a /= n;
    return s;
  }

  /// Largest |imaginary part| after removing the global phase that makes the
  /// largest amplitude real.
  [[nodiscard]] double max_imaginary_after_phase_fix() const {
    std::size_t imax = 0;
    for (std::size_t i = 0; i < amp_.size(); ++i)
      if (std::abs(amp_[i]) > std::abs(amp_[imax]))
        imax = i;
    if (std::abs(amp_[imax]) == 0.0)
      return 0.0;
    const cplx ph = std::conj(amp_[imax]) / std::abs(amp_[imax]);
    double m = 0.0;
    for (const auto &a : amp_)
      m = std::max(m, std::abs((a * ph).imag()));
    return m;
  }

private:
  int n_qubits_ = 0;
  std::vector<cplx> amp_;
};

inline cplx inner(const StateVector &a, const StateVector &b) {
  if (a.n_qubits() != b.n_qubits())
    throw InvalidInput("state dimension mismatch");
  return inner_product(a.amplitudes(), b.amplitudes());
}

inline StateVector prepare_reference(const ReferenceDeterminant &ref, int n_qubits) {
  for (int q : ref.occupied)
    if (q < 0 || q >= n_qubits)
      throw InvalidInput("reference occupies a qubit outside the register");
  return StateVector::basis(n_qubits, ref.bitstring());
}

/// Exact linear action of a Pauli sum; the result is not renormalized.
inline StateVector apply(const PauliSum &op, const StateVector &s) {
  if (op.n_qubits() != s.n_qubits())
    throw InvalidInput("operator acts on " + std::to_string(op.n_qubits()) + " qubits, state has " +
                       std::to_string(s.n_qubits()));
  std::map<std::uint64_t, std::vector<std::pair<std::uint64_t, cplx>>> groups;
  for (const auto &[p, c] : op.terms())
    groups[p.x].emplace_back(p.z, c * detail::i_power(p.y_count()));
  StateVector out(s.n_qubits());
  auto in = s.amplitudes();
  auto dst = out.amplitudes();
  parallel_for(s.dim(), [&](std::size_t b, std::size_t e) {
    for (std::size_t r = b; r < e; ++r) {
      cplx acc{};
      for (const auto &[x, zc] : groups) {
        const std::uint64_t col = r ^ x;
        cplx f{};
        for (const auto &[z, c] : zc)
          f += (std::popcount(z & col) % 2) ? -c : c;
        acc += f * in[col];
      }
      dst[r] = acc;
    }
  });
  return out;
}

inline StateVector apply(const SparseOperator &op, const StateVector &s) {
  if (op.n_qubits() != s.n_qubits())
    throw InvalidInput("operator/state qubit count mismatch");
  StateVector out(s.n_qubits());
  op.apply(s.amplitudes(), out.amplitudes());
  return out;
}

inline cplx expectation(const PauliSum &op, const StateVector &s) { return inner(s, apply(op, s)); }
inline cplx expectation(const SparseOperator &op, const StateVector &s) { return inner(s, apply(op, s)); }

struct EvolutionPlan {
  enum class Mode { exact, trotter };
  Mode mode = Mode::exact;
  int trotter_steps = 1;
  double taylor_tolerance = 1e-12;

  static EvolutionPlan exact() { return {}; }
  static EvolutionPlan trotter(int k) {
    if (k < 1)
      throw InvalidInput("trotter step count must be >= 1");
    return {Mode::trotter, k, 1e-12};
  }
};

/// exp(theta * tau)|s> for an anti-Hermitian generator already compiled on a
/// sector containing the support of s.
inline StateVector evolve(double theta, const SparseOperator &tau, const StateVector &s,
                          const EvolutionPlan &plan = {}) {
  if (tau.n_qubits() != s.n_qubits())
    throw InvalidInput("generator/state qubit count mismatch");
  return StateVector(s.n_qubits(), expm_multiply(tau, theta, s.amplitudes(), plan.taylor_tolerance));
}

inline StateVector evolve(double theta, const PoolGenerator &tau, const StateVector &s,
                          const EvolutionPlan &plan = {}) {
  if (!tau.tau.is_anti_hermitian(1e-12))
    throw InvalidInput("generator is not anti-Hermitian");
  return evolve(theta, SparseOperator::from_fermion(tau.tau, Sector::full(s.n_qubits())), s, plan);
}

/// UCC state. Exact mode: exp(sum_u t_u tau_u)|ref> as one exponential.
/// Trotter(k): (prod_u exp(t_u/k tau_u))^k |ref>, factor 0 applied first.
inline StateVector ucc_state(std::span<const double> params, std::span<const SparseOperator> generators,
                             const StateVector &ref, const EvolutionPlan &plan = {}) {
  if (params.size() != generators.size())
    throw InvalidInput("parameter count differs from generator count");
  if (generators.empty())
    return ref;
  if (plan.mode == EvolutionPlan::Mode::exact) {
    std::vector<const SparseOperator *> ptrs;
    for (const auto &g : generators)
      ptrs.push_back(&g);
    const SparseOperator sum = SparseOperator::combine(params, ptrs);
    return evolve(1.0, sum, ref, plan);
  }
  StateVector s = ref;
  for (int step = 0; step < plan.trotter_steps; ++step)
    for (std::size_t u = 0; u < generators.size(); ++u)
      s = evolve(params[u] / plan.trotter_steps, generators[u], s, plan);
  return s;
}

/// Compiles generators on a sector (default: the full register).
inline std::vector<SparseOperator> compile_generators(const OperatorPool &pool, const Sector &sector) {
  std::vector<SparseOperator> out;
  out.reserve(pool.size());
  for (const auto &g : pool)
    out.push_back(SparseOperator::from_fermion(g.tau, sector));
  return out;
}

inline StateVector ucc_state(std::span<const double> params, const OperatorPool &pool, const StateVector &ref,
                             const EvolutionPlan &plan = {}) {
  for (const auto &g : pool)
    if (!g.tau.is_anti_hermitian(1e-12))
      throw InvalidInput("generator is not anti-Hermitian");
  const auto compiled = compile_generators(pool, Sector::full(ref.n_qubits()));
  return ucc_state(params, compiled, ref, plan);
}

} // namespace kvqe
