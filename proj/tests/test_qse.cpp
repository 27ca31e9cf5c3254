#include <gtest/gtest.h>

#include "test_helpers.hpp"

using namespace kvqe;
using namespace kvqe::testing;

namespace {

constexpr double kDimerExact = -0.8284271247461903;

std::vector<double> sector_spectrum(const IntegralSet &ints) {
  const auto ev = dense_sector_spectrum(dense_pauli(qubit_hamiltonian(ints)), ints.n_qubits(), ints.nelec, ints.ms2);
  return {ev.data(), ev.data() + ev.size()};
}

} // namespace

TEST(Qse, IdentityComesFirst) {
  const IntegralSet ints = build_hubbard_dimer(1.0, 4.0);
  const auto sys = VqeSystem::build(ints);
  const auto space = qse_space(ints, sys.reference);
  ASSERT_GE(space.size(), 2u);
  EXPECT_EQ(space.labels[0], "I");
  const auto ops = compile_space(space, sys.sector);
  const auto [h, s] = qse_matrices(sys.ref, sys.h, ops);
  EXPECT_NEAR(s(0, 0).real(), 1.0, 1e-14);
  EXPECT_NEAR(h(0, 0).real(), reference_energy(ints, sys.reference), 1e-12);
  EXPECT_LE((h - h.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((s - s.adjoint()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Qse, FullSpaceReproducesSectorSpectrum) {
  // two electrons: singles and doubles over general indices span the sector
  const IntegralSet dimer = build_hubbard_dimer(1.0, 4.0);
  const IntegralSet rnd = random_integrals(3, 2, KMesh::gamma(), {0, 0, 0}, 31);
  for (const IntegralSet &ints : {dimer, rnd}) {
    const auto sys = VqeSystem::build(ints);
    QseOptions opt;
    opt.truncation = QseTruncation::full_SD;
    opt.momentum_filter = false;
    const auto r = run_qse(sys, ints, sys.ref, opt);
    const auto want = sector_spectrum(ints);
    ASSERT_EQ(r.retained, static_cast<int>(want.size()));
    for (std::size_t i = 0; i < want.size(); ++i)
      EXPECT_NEAR(r.energies[i], want[i], 1e-8);
  }
}

TEST(Qse, MomentumFilterKeepsOneBlockOfThePencil) {
  // H and S are block diagonal in crystal momentum, so the filtered spectrum
  // is a subset of the unfiltered one
  const auto m = ssh_hubbard_model(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  const auto sys = VqeSystem::build(m.integrals);
  QseOptions opt;
  opt.truncation = QseTruncation::full_SD;
  const auto filtered = run_qse(sys, m.integrals, sys.ref, opt);
  opt.momentum_filter = false;
  const auto all = run_qse(sys, m.integrals, sys.ref, opt);
  EXPECT_LT(filtered.retained, all.retained);
  for (double e : filtered.energies) {
    double best = 1e9;
    for (double x : all.energies)
      best = std::min(best, std::abs(x - e));
    EXPECT_LE(best, 1e-8) << e;
  }
}

TEST(Qse, GroundEnergyIsVariational) {
  const auto m = ssh_hubbard_model(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  const auto sys = VqeSystem::build(m.integrals);
  const double e_fci = fci(m.integrals, 1).energies[0];
  const double e_ref = reference_energy(m.integrals, sys.reference);
  for (bool spin : {false, true}) {
    QseOptions opt;
    opt.spin_adapted = spin;
    const auto r = run_qse(sys, m.integrals, sys.ref, opt);
    EXPECT_LE(r.energies[0], e_ref + 1e-10);
    EXPECT_GE(r.energies[0], e_fci - 1e-10);
  }
}

TEST(Qse, DimerOnCoarseAdaptReachesFci) {
  const IntegralSet ints = build_hubbard_dimer(1.0, 4.0);
  const auto sys = VqeSystem::build(ints);
  const auto gens = sys.compile(build_pool(ints, PoolKind::GSD, sys.reference));
  const auto tr = adapt_vqe(sys.h, gens, sys.ref, AdaptConfig::preset("ADAPT(1)"));
  const auto r = run_qse(sys, ints, tr.state);
  EXPECT_NEAR(r.energies[0], kDimerExact, 1e-8);
}

TEST(Qse, CanonicalOrthogonalizationDropsDuplicates) {
  const IntegralSet ints = build_hubbard_dimer(1.0, 4.0);
  const auto sys = VqeSystem::build(ints);
  QseSpace space = qse_space(ints, sys.reference);
  const auto [h0, s0] = qse_matrices(sys.ref, sys.h, compile_space(space, sys.sector));
  const auto base = solve_pencil(h0, s0);
  space.operators.push_back(space.operators[1] * cplx(2.0));
  space.labels.push_back("dup");
  const auto [h, s] = qse_matrices(sys.ref, sys.h, compile_space(space, sys.sector));
  const auto dup = solve_pencil(h, s);
  EXPECT_EQ(dup.retained, base.retained);
  for (int i = 0; i < base.retained; ++i)
    EXPECT_NEAR(dup.energies[static_cast<std::size_t>(i)], base.energies[static_cast<std::size_t>(i)], 1e-10);
}

TEST(Qse, SpinAdaptedSpaceHasFrozenSize) {
  // 8 bands, 8 electrons, no momentum filter: identity + singlet singles and
  // A/B singlet doubles (empty combinations pruned)
  const auto m = ssh_hubbard_model(4, 1.0, 0.6, 4.0, LatticeBasis::band);
  QseOptions opt;
  opt.spin_adapted = true;
  opt.momentum_filter = false;
  EXPECT_EQ(qse_space(m.integrals, aufbau_reference(m.integrals), opt).size(), 153u);
}

TEST(Qse, ExcitedStatesAndBadInputs) {
  const IntegralSet ints = build_hubbard_dimer(1.0, 4.0);
  const auto sys = VqeSystem::build(ints);
  QseOptions opt;
  opt.truncation = QseTruncation::full_SD;
  opt.momentum_filter = false;
  const auto r = run_qse(sys, ints, sys.ref, opt);
  const auto ex = excited_states(r, 2);
  ASSERT_EQ(ex.size(), 2u);
  EXPECT_LE(ex[0].first, ex[1].first);
  EXPECT_THROW(excited_states(r, r.retained + 1), InvalidInput);
  EXPECT_THROW(solve_pencil(CMatrix::Identity(2, 2), CMatrix::Identity(3, 3)), InvalidInput);
  EXPECT_THROW(solve_pencil(CMatrix::Identity(2, 2), CMatrix::Zero(2, 2)), NumericalError);
}
