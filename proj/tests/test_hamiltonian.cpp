#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "test_helpers.hpp"

using namespace kvqe;
using namespace kvqe::testing;

namespace {

IntegralSet complex_fixture(unsigned seed = 7) {
  return random_integrals(4, 4, KMesh::line(2), {0, 1, 0, 1}, seed);
}

std::vector<std::uint64_t> sector_states(int n, int nelec, int ms2) {
  const Sector s = Sector::particles(n, nelec, ms2);
  return {s.states.begin(), s.states.end()};
}

} // namespace

TEST(Integrals, RandomFixtureIsValid) {
  const IntegralSet ints = complex_fixture();
  EXPECT_NO_THROW(ints.validate());
  EXPECT_GT(ints.max_imaginary(), 1e-3);
  EXPECT_LT(ints.max_hermiticity_violation(), 1e-15);
}

TEST(Integrals, ValidateRejectsBrokenInvariants) {
  IntegralSet ints = complex_fixture();
  ints.h2(0, 1, 0, 0) = 0.1; // k: 0 + 1/2 - 0 - 0
  EXPECT_THROW(ints.validate(), InvalidInput);
  ints = complex_fixture();
  ints.h1(0, 2) += 0.01;
  EXPECT_THROW(ints.validate(), InvalidInput);
  ints = complex_fixture();
  ints.ms2 = 1;
  EXPECT_THROW(ints.validate(), InvalidInput);
}

TEST(Hamiltonian, DeterminantEnergiesMatchSlaterCondon) {
  const IntegralSet ints = complex_fixture();
  const auto h = dense_pauli(qubit_hamiltonian(ints));
  for (std::uint64_t b : sector_states(8, 4, 0)) {
    std::vector<int> alpha, beta;
    for (int q = 0; q < 8; ++q)
      if ((b >> q) & 1)
        (q % 2 ? beta : alpha).push_back(q / 2);
    const auto det = ReferenceDeterminant::from_spatial(alpha, beta, ints);
    ASSERT_EQ(det.bitstring(), b);
    EXPECT_NEAR(h(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)).real(), reference_energy(ints, det), 1e-12);
  }
}

TEST(Hamiltonian, HermitianAndSymmetric) {
  const IntegralSet ints = complex_fixture();
  const FermionOperator hf = build_hamiltonian(ints);
  EXPECT_TRUE(hf.is_hermitian(1e-12));
  const PauliSum hq = qubit_hamiltonian(ints);
  EXPECT_TRUE(hq.is_hermitian(1e-12));
  const auto h = dense_pauli(hq);
  EXPECT_LT(max_abs(h - dense_fermion(hf, 8)), 1e-12);
  const auto num = dense_fermion(number_operator(8), 8);
  const auto sz = dense_fermion(sz_operator(8), 8);
  EXPECT_LT(max_abs(h * num - num * h), 1e-12);
  EXPECT_LT(max_abs(h * sz - sz * h), 1e-12);
}

TEST(Hamiltonian, MomentumIsConservedByEveryTerm) {
  const IntegralSet ints = complex_fixture();
  const FermionOperator h = build_hamiltonian(ints);
  for (const auto &[t, c] : h.terms()) {
    std::vector<std::pair<int, bool>> f;
    for (const auto &l : t)
      f.emplace_back(ints.orb_k[l.mode / 2], l.dagger);
    EXPECT_TRUE(momentum_conserved(f, ints.kmesh));
  }
}

TEST(Hamiltonian, HubbardDimerGroundState) {
  const IntegralSet ints = build_hubbard_dimer(1.0, 4.0);
  const auto spec = dense_sector_spectrum(dense_pauli(qubit_hamiltonian(ints)), 4, 2, 0);
  EXPECT_NEAR(spec(0), 2.0 - std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(spec(0), -0.8284271247, 1e-10);
}

TEST(Models, SiteAndBandBasesShareTheSpectrum) {
  const IntegralSet site = build_ssh_hubbard(2, 1.0, 0.6, 4.0, LatticeBasis::site);
  const IntegralSet band = build_ssh_hubbard(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  EXPECT_NO_THROW(band.validate());
  EXPECT_EQ(band.kmesh.nkpt(), 2);
  const auto es = dense_sector_spectrum(dense_pauli(qubit_hamiltonian(site)), 8, 4, 0);
  const auto eb = dense_sector_spectrum(dense_pauli(qubit_hamiltonian(band)), 8, 4, 0);
  ASSERT_EQ(es.size(), eb.size());
  EXPECT_LT((es - eb).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Models, BandBasisHasComplexIntegrals) {
  const IntegralSet band = build_ssh_hubbard(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  EXPECT_GT(band.max_imaginary(), 1e-3);
  const auto ref = aufbau_reference(band);
  EXPECT_EQ(ref.occupied.size(), 4u);
  const CMatrix f = fock_matrix(band, ref);
  // Canonical orbitals: the reference Fock matrix is diagonal.
  EXPECT_LT((f - CMatrix(f.diagonal().asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Models, BandOrbitalsAreOrthonormalInTheSiteBasis) {
  const auto model = ssh_hubbard_model(4, 1.0, 0.6, 4.0, LatticeBasis::band);
  const CMatrix &c = model.orbitals.coefficients;
  EXPECT_LT((c.adjoint() * c - CMatrix::Identity(c.cols(), c.cols())).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(model.integrals.norb, 8);
}

TEST(Pfcidump, RoundTripIsExact) {
  const IntegralSet ints = complex_fixture();
  std::stringstream ss;
  write_pfcidump(ints, ss);
  const IntegralSet back = parse_pfcidump(ss);
  EXPECT_EQ(back.norb, ints.norb);
  EXPECT_EQ(back.nelec, ints.nelec);
  EXPECT_EQ(back.orb_k, ints.orb_k);
  EXPECT_EQ(back.ecore, ints.ecore);
  EXPECT_EQ((back.h1 - ints.h1).cwiseAbs().maxCoeff(), 0.0);
  for (std::size_t i = 0; i < ints.h2.data().size(); ++i)
    EXPECT_EQ(back.h2.data()[i], ints.h2.data()[i]);
}

TEST(Pfcidump, FileRoundTripOfModel) {
  const IntegralSet ints = build_ssh_hubbard(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  const auto path = (std::filesystem::temp_directory_path() / "kvqe_roundtrip.pfcidump").string();
  write_pfcidump(ints, path);
  const IntegralSet back = load_pfcidump(path);
  std::filesystem::remove(path);
  EXPECT_NEAR(reference_energy(back, aufbau_reference(back)), reference_energy(ints, aufbau_reference(ints)), 1e-14);
}

namespace {

const char *kHeader = "&PFCI NORB=2 NELEC=2 MS2=0 NKPT=2 ECORE=0.5\n"
                      "KPT 1 0.0 0.0 0.0\n"
                      "KPT 2 0.5 0.0 0.0\n"
                      "ORBK 1 2\n";

int parse_error_line(const std::string &text) {
  std::istringstream in(text);
  try {
    parse_pfcidump(in, "x.pfcidump");
  } catch (const ParseError &e) {
    return e.line();
  }
  return -1;
}

} // namespace

TEST(Pfcidump, MinimalFileParses) {
  std::istringstream in(std::string(kHeader) + "# comment\n"
                                               "-1.0 0.0 1 1 0 0\n"
                                               " 1.0 0.0 2 2 0 0\n"
                                               " 0.7 0.0 1 1 1 1\n"
                                               " 0.2 0.0 1 2 2 1\n"
                                               " 0.2 0.0 2 1 1 2\n"
                                               " 0.1 0.0 1 1 2 2\n"
                                               " 0.1 0.0 2 2 1 1\n"
                                               " 0.3 0.0 0 0 0 0\n");
  const IntegralSet ints = parse_pfcidump(in);
  EXPECT_DOUBLE_EQ(ints.ecore, 0.8);
  EXPECT_EQ(ints.orb_k, (std::vector<int>{0, 1}));
  EXPECT_EQ(ints.h2(0, 0, 1, 1), cplx(0.1));
}

TEST(Pfcidump, MomentumViolationReportsLine) {
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "0.1 0.0 1 2 0 0\n"), 5);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "\n0.1 0.0 1 1 1 2\n"), 6);
}

TEST(Pfcidump, MalformedInputsAreRejected) {
  EXPECT_EQ(parse_error_line("1.0 0.0 1 1 0 0\n"), 1);
  EXPECT_EQ(parse_error_line("&PFCI NORB=2 NELEC=2 MS2=0 ECORE=0\n"), 1);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "1.0 0.0 3 1 0 0\n"), 5);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "1.0 abc 1 1 0 0\n"), 5);
  EXPECT_EQ(parse_error_line(std::string(kHeader) + "1.0 0.0 1 1 0 1\n"), 5);
  std::istringstream nonherm(std::string(kHeader) + "0.0 0.5 1 1 0 0\n");
  EXPECT_THROW(parse_pfcidump(nonherm), InvalidInput);
  EXPECT_THROW(load_pfcidump("/nonexistent/file.pfcidump"), InvalidInput);
}

TEST(SupercellDump, RoundTrip) {
  SupercellDump d;
  d.coefficients = CMatrix::Random(4, 3);
  d.energies = Eigen::VectorXd::LinSpaced(3, -1.0, 1.0);
  d.overlap = RMatrix::Identity(4, 4);
  d.overlap(0, 1) = d.overlap(1, 0) = 0.1;
  std::stringstream ss;
  write_supercell_dump(d, ss);
  const SupercellDump back = parse_supercell_dump(ss);
  EXPECT_EQ((back.coefficients - d.coefficients).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.energies - d.energies).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ((back.overlap - d.overlap).cwiseAbs().maxCoeff(), 0.0);
}
