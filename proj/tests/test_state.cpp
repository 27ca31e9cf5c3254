#include <gtest/gtest.h>

#include "test_helpers.hpp"

using namespace kvqe;
using namespace kvqe::testing;

namespace {

IntegralSet complex_fixture() { return random_integrals(4, 4, KMesh::line(2), {0, 1, 0, 1}, 11); }

} // namespace

TEST(Sparse, PauliAndFermionRoutesAgree) {
  const IntegralSet ints = complex_fixture();
  const auto full = Sector::full(8);
  const SparseOperator a = SparseOperator::from_pauli(qubit_hamiltonian(ints), full);
  const SparseOperator b = SparseOperator::from_fermion(build_hamiltonian(ints), full);
  const auto oracle = dense_pauli(qubit_hamiltonian(ints));
  EXPECT_LT(max_abs(a.dense() - oracle), 1e-12);
  EXPECT_LT(max_abs(b.dense() - oracle), 1e-12);
}

TEST(Sparse, SectorRestrictionKeepsOnlySectorRows) {
  const IntegralSet ints = complex_fixture();
  const Sector sec = Sector::particles(8, 4, 0);
  EXPECT_EQ(sec.size(), 36u);
  const SparseOperator h = SparseOperator::from_fermion(build_hamiltonian(ints), sec);
  const auto m = h.sector_matrix(sec);
  const auto oracle = dense_pauli(qubit_hamiltonian(ints));
  for (std::size_t i = 0; i < sec.size(); ++i)
    for (std::size_t j = 0; j < sec.size(); ++j)
      EXPECT_LT(std::abs(m(i, j) - oracle(sec.states[i], sec.states[j])), 1e-12);
}

TEST(Sparse, NormBoundDominatesSpectralNorm) {
  const IntegralSet ints = complex_fixture();
  const SparseOperator h = SparseOperator::from_pauli(qubit_hamiltonian(ints), Sector::full(8));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.dense(), Eigen::EigenvaluesOnly);
  EXPECT_GE(h.norm_bound() + 1e-12, es.eigenvalues().cwiseAbs().maxCoeff());
}

TEST(Sparse, ExponentialActionMatchesDenseOracle) {
  const IntegralSet ints = complex_fixture();
  const auto pool = build_pool(ints, PoolKind::GSD, aufbau_reference(ints));
  ASSERT_GE(pool.size(), 3u);
  const auto gens = compile_generators(pool, Sector::full(8));
  const auto theta = random_params(pool.size(), 3, -1.0, 1.0);
  std::vector<const SparseOperator *> ptrs;
  for (const auto &g : gens)
    ptrs.push_back(&g);
  const SparseOperator sum = SparseOperator::combine(theta, ptrs);
  const auto ref = prepare_reference(aufbau_reference(ints), 8);
  const auto got = to_eigen(evolve(1.0, sum, ref));
  const auto want = dense_expm_apply(sum.dense(), to_eigen(ref));
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-11);
  EXPECT_NEAR(got.norm(), 1.0, 1e-12);
}

TEST(State, PauliApplicationMatchesDense) {
  const IntegralSet ints = complex_fixture();
  const PauliSum h = qubit_hamiltonian(ints);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  std::vector<cplx> amp(256);
  for (auto &a : amp)
    a = {g(rng), g(rng)};
  const StateVector s = StateVector(8, amp).normalized();
  const auto got = to_eigen(apply(h, s));
  const Eigen::VectorXcd want = dense_pauli(h) * to_eigen(s);
  EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-12);
  const cplx e = expectation(h, s);
  EXPECT_LT(std::abs(e.imag()), 1e-12);
  EXPECT_NEAR(e.real(), (to_eigen(s).adjoint() * want)(0).real(), 1e-12);
}

TEST(State, ReferencePreparation) {
  const IntegralSet ints = complex_fixture();
  const auto ref = aufbau_reference(ints);
  const StateVector s = prepare_reference(ref, 8);
  EXPECT_EQ(s[ref.bitstring()], cplx(1.0));
  EXPECT_NEAR(expectation(qubit_hamiltonian(ints), s).real(), reference_energy(ints, ref), 1e-12);
  ReferenceDeterminant bad;
  bad.occupied = {9};
  EXPECT_THROW(prepare_reference(bad, 8), InvalidInput);
}

TEST(State, UccExactAndTrotterMatchDenseOracles) {
  const IntegralSet ints = build_ssh_hubbard(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  const auto ref_det = aufbau_reference(ints);
  const auto pool = build_pool(ints, PoolKind::SD, ref_det);
  const auto ref = prepare_reference(ref_det, 8);
  const auto theta = random_params(pool.size(), 9);
  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(256, 256);
  for (std::size_t u = 0; u < pool.size(); ++u)
    a += theta[u] * dense_fermion(pool[u].tau, 8);
  const auto exact = to_eigen(ucc_state(theta, pool, ref));
  EXPECT_LT((exact - dense_expm_apply(a, to_eigen(ref))).cwiseAbs().maxCoeff(), 1e-11);

  for (int k : {1, 3}) {
    Eigen::VectorXcd v = to_eigen(ref);
    for (int step = 0; step < k; ++step)
      for (std::size_t u = 0; u < pool.size(); ++u)
        v = dense_expm_apply((theta[u] / k) * dense_fermion(pool[u].tau, 8), v);
    const auto trot = to_eigen(ucc_state(theta, pool, ref, EvolutionPlan::trotter(k)));
    EXPECT_LT((trot - v).cwiseAbs().maxCoeff(), 1e-11) << "k=" << k;
  }
  EXPECT_THROW(EvolutionPlan::trotter(0), InvalidInput);
}

TEST(State, EvolutionRejectsNonAntiHermitianGenerator) {
  PoolGenerator g;
  g.tau = excitation({2}, {0});
  EXPECT_THROW(evolve(0.1, g, StateVector::basis(4, 1), {}), InvalidInput);
}

TEST(State, QubitLimitIsEnforced) { EXPECT_THROW(StateVector(31), InvalidInput); }

TEST(State, ThreadCountDoesNotChangeResults) {
  const IntegralSet ints = complex_fixture();
  const PauliSum h = qubit_hamiltonian(ints);
  const auto theta = random_params(256, 1);
  std::vector<cplx> amp(theta.begin(), theta.end());
  const StateVector s(8, amp);
  set_num_threads(1);
  const cplx e1 = expectation(h, s);
  set_num_threads(4);
  const cplx e4 = expectation(h, s);
  set_num_threads(0);
  EXPECT_EQ(e1, e4);
}
