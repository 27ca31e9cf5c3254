#pragma once

#include "kvqe/integrals.hpp"
#include "kvqe/operators.hpp"

namespace kvqe {

/// Second-quantized Hamiltonian over spin orbitals,
///   H = ecore + sum h_pq a+_p a_q + 1/2 sum h^{pq}_{rs} a+_p a+_q a_r a_s,
/// with spatial integrals expanded over both spins (p,s share one spin and
/// q,r the other). Only momentum-allowed (nonzero) entries contribute.
inline FermionOperator build_hamiltonian(const IntegralSet &ints) {
  const int n = ints.norb;
  FermionOperator h = FermionOperator::identity(ints.ecore);
  constexpr Spin spins[] = {Spin::alpha, Spin::beta};
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      const cplx v = ints.h1(p, q);
      if (v == cplx{})
        continue;
      for (Spin s : spins)
        h.add_term({cre(spin_orbital(p, s)), ann(spin_orbital(q, s))}, v);
    }
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q)
      for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s) {
          const cplx v = ints.h2(p, q, r, s);
          if (v == cplx{})
            continue;
          for (Spin s1 : spins)
            for (Spin s2 : spins)
              h.add_term({cre(spin_orbital(p, s1)), cre(spin_orbital(q, s2)), ann(spin_orbital(r, s2)),
                          ann(spin_orbital(s, s1))},
                         0.5 * v);
        }
  return h;
}

inline PauliSum qubit_hamiltonian(const IntegralSet &ints) {
  return jordan_wigner(build_hamiltonian(ints), ints.n_qubits());
}

} // namespace kvqe
