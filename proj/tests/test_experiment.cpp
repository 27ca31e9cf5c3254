#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_helpers.hpp"

#include "kvqe/experiment.hpp"

using namespace kvqe;
using namespace kvqe::testing;
namespace fs = std::filesystem;

namespace {

class Workdir : public ::testing::Test {
protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("kvqe_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    fs::remove_all(dir_);
    set_num_threads(0);
  }

  std::string write(const std::string &name, const std::string &text) const {
    const auto p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }

  static std::string slurp(const std::string &path) {
    std::ifstream f(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
  }

  fs::path dir_;
};

const char *kDimer = "[input]\nmodel = hubbard-dimer\nt = 1.0\nu = 4.0\n[method]\nname = fci\n";

} // namespace

TEST_F(Workdir, ValidConfigHasNoFindings) {
  EXPECT_TRUE(validate(write("a.ini", kDimer)).empty());
  EXPECT_TRUE(validate(write("b.ini", "[input]\nmodel = ssh-hubbard\n[method]\nname = k2g-adapt\npreset = ADAPT(X)\n"))
                  .empty());
}

TEST_F(Workdir, MissingInputFileIsOneFinding) {
  const auto f = validate(write("a.ini", "[input]\npfcidump = nowhere.pfcidump\n[method]\nname = fci\n"));
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].find("not found"), std::string::npos);
}

TEST_F(Workdir, BadEpsilonReportsAcceptedRange) {
  const auto f = validate(write("a.ini", "[input]\nmodel = hubbard-dimer\n[method]\nname = adapt\nepsilon = -2\n"));
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].find("(0, 1]"), std::string::npos);
}

TEST_F(Workdir, ValidationListsEveryProblem) {
  const auto f = validate(write("a.ini", "[input]\nmodel = graphene\nbogus = 1\n[method]\nname = magic\nbatch = x\n"
                                         "[extra]\nk = v\n"));
  EXPECT_EQ(f.size(), 5u);
  EXPECT_EQ(validate((dir_ / "missing.ini").string()).size(), 1u);
  EXPECT_EQ(validate(write("b.ini", "[method]\nname = fci\n")).size(), 1u); // no input source
  EXPECT_EQ(validate(write("c.ini", "[input]\nmodel = hubbard-dimer\n[method]\npreset = ADAPT(3)\nepsilon = 0.1\n"))
                .size(),
            1u);
}

TEST_F(Workdir, ConfigValuesAreParsed) {
  std::vector<std::string> findings;
  std::istringstream in("[input]\nmodel = ssh-hubbard\nncell = 3\nt2 = 0.4\nbasis = site\n"
                        "[method]\nname = qse\npreset = ADAPT(2)\nbatch = 4\npool = sd\nreadmit = no\n"
                        "qse_truncation = full-SD\nqse_spin_adapted = yes\ntrotter = 2\n[output]\nthreads = 3\n");
  const auto c = parse_config(in, findings);
  EXPECT_TRUE(findings.empty());
  ASSERT_TRUE(c.model);
  EXPECT_EQ(c.model->ncell, 3);
  EXPECT_EQ(c.model->t2, 0.4);
  EXPECT_EQ(c.model->basis, LatticeBasis::site);
  EXPECT_EQ(c.method, "qse");
  EXPECT_DOUBLE_EQ(c.adapt.epsilon, 1e-2);
  EXPECT_EQ(c.adapt.batch, 4);
  EXPECT_FALSE(c.adapt.readmit);
  EXPECT_EQ(c.pool, PoolKind::SD);
  EXPECT_EQ(c.qse.truncation, QseTruncation::full_SD);
  EXPECT_TRUE(c.qse.spin_adapted);
  EXPECT_EQ(c.trotter, 2);
  EXPECT_EQ(c.threads, 3);
}

TEST_F(Workdir, DimerFciReport) {
  std::ostringstream out, err;
  EXPECT_EQ(run(write("a.ini", kDimer), out, err), kExitOk) << err.str();
  EXPECT_NE(out.str().find("-0.8284271247"), std::string::npos);
  // the resolved configuration is embedded
  EXPECT_NE(out.str().find("input.model = hubbard-dimer"), std::string::npos);
  EXPECT_NE(out.str().find("method.name = fci"), std::string::npos);
}

TEST_F(Workdir, AdaptReportListsOperatorsAndResidual) {
  std::ostringstream out, err;
  const auto cfg = write("a.ini", "[input]\nmodel = ssh-hubbard\nncell = 2\n[method]\nname = adapt\n"
                                  "preset = ADAPT(3)\n[output]\nreport = r.txt\ncsv = r.csv\n");
  ASSERT_EQ(run(cfg, out, err), kExitOk) << err.str();
  const std::string rep = slurp((dir_ / "r.txt").string());
  EXPECT_NE(rep.find("parameters = "), std::string::npos);
  EXPECT_NE(rep.find("acse_mare_im_kcalmol"), std::string::npos);
  const auto pos = rep.find("residual_norm = ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(std::stod(rep.substr(pos + 16)), 1e-3);
  const std::string csv = slurp((dir_ / "r.csv").string());
  EXPECT_EQ(csv.rfind("R,method,energy_hartree,error_kcalmol\n0.0000,adapt,", 0), 0u);
}

TEST_F(Workdir, ExitCodes) {
  std::ostringstream out, err;
  EXPECT_EQ(run(write("bad.ini", "[method]\nname = nope\n"), out, err), kExitConfig);
  EXPECT_NE(err.str().find("config error"), std::string::npos);

  // complex orbitals whose occupied space has no real basis: K2G must fail
  const IntegralSet dimer = build_hubbard_dimer(1.0, 4.0);
  write_pfcidump(dimer, (dir_ / "d.pfcidump").string());
  SupercellDump sc;
  const double h = std::sqrt(0.5);
  sc.coefficients.resize(2, 2);
  sc.coefficients << cplx(h, 0), cplx(h, 0), cplx(0, h), cplx(0, -h);
  sc.energies = Eigen::Vector2d(-1.0, 1.0);
  sc.overlap = RMatrix::Identity(2, 2);
  write_supercell_dump(sc, (dir_ / "d.scell").string());
  const auto cfg = write("k.ini", "[input]\npfcidump = d.pfcidump\nsupercell = d.scell\n[method]\nname = k2g-fci\n");
  EXPECT_TRUE(validate(cfg).empty());
  std::ostringstream out2, err2;
  EXPECT_EQ(run(cfg, out2, err2), kExitNumerical);
  EXPECT_NE(err2.str().find("numerical failure"), std::string::npos);
}

TEST_F(Workdir, NonConvergedRunStillExitsZero) {
  std::ostringstream out, err;
  const auto cfg = write("a.ini", "[input]\nmodel = ssh-hubbard\n[method]\nname = adapt\nepsilon = 1e-6\n"
                                  "max_iterations = 1\n");
  EXPECT_EQ(run(cfg, out, err), kExitOk);
  EXPECT_NE(out.str().find("status = not-converged"), std::string::npos);
}

TEST_F(Workdir, SinglePointFciScanHasZeroErrors) {
  const auto cfg = write("a.ini", "[input]\nmodel = hubbard-dimer\n[scan]\nparameter = u\nvalues = 4\n"
                                  "methods = fci\n");
  std::vector<std::string> f;
  const auto rows = scan(load_config(cfg, f));
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(*rows[0].error_kcalmol, 0.0);
  EXPECT_NEAR(*rows[0].energy, -0.8284271247461903, 1e-10);
}

TEST_F(Workdir, K2GAdaptStaysExactAcrossHoppingScan) {
  const auto cfg = write("a.ini", "[input]\nmodel = ssh-hubbard\nncell = 2\nu = 4\n[method]\npreset = ADAPT(3)\n"
                                  "[scan]\nparameter = t2\nvalues = 0.2, 0.4, 0.6, 0.8, 1.0\n"
                                  "methods = fci, k2g-adapt\n");
  std::vector<std::string> f;
  const auto rows = scan(load_config(cfg, f));
  ASSERT_EQ(rows.size(), 10u);
  for (std::size_t i = 0; i < rows.size(); i += 2) {
    ASSERT_TRUE(rows[i + 1].energy) << rows[i + 1].status;
    EXPECT_LE(std::abs(*rows[i + 1].energy - *rows[i].energy), 1e-6) << "t2 = " << rows[i].r;
  }
}

TEST_F(Workdir, FailedPointIsRecordedAndScanContinues) {
  write_pfcidump(build_hubbard_dimer(1.0, 4.0), (dir_ / "good.pfcidump").string());
  write("bad.pfcidump", "this is not a pfcidump\n");
  const auto cfg = write("a.ini", "[scan]\npfcidumps = good.pfcidump, bad.pfcidump, good.pfcidump\n"
                                  "values = 0.5, 1.0, 1.5\nmethods = hf, fci\n[output]\ncsv = out.csv\n");
  std::ostringstream out, err;
  ASSERT_EQ(run_scan(cfg, out, err), kExitOk) << err.str();
  const std::string csv = slurp((dir_ / "out.csv").string());
  EXPECT_NE(csv.find("1.0000,hf,NaN,NaN\n1.0000,fci,NaN,NaN\n"), std::string::npos);
  EXPECT_NE(csv.find("1.5000,fci,-0.82842712,0.000000\n"), std::string::npos);
  EXPECT_NE(out.str().find("1.0000 hf: failed"), std::string::npos);
}

TEST_F(Workdir, CsvIsByteIdenticalAcrossRunsAndThreadCounts) {
  auto once = [&](int threads) {
    const auto cfg = write("a.ini", "[input]\nmodel = ssh-hubbard\nncell = 2\n[method]\npreset = ADAPT(3)\n"
                                    "[scan]\nparameter = t2\nvalues = 0.5, 0.9\nmethods = hf, fci, uccsd, adapt, "
                                    "k2g-adapt, qse\n[output]\ncsv = out.csv\nthreads = " +
                                        std::to_string(threads) + "\n");
    std::ostringstream out, err;
    EXPECT_EQ(run_scan(cfg, out, err), kExitOk) << err.str();
    return slurp((dir_ / "out.csv").string());
  };
  const std::string a = once(1), b = once(1), c = once(4);
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST_F(Workdir, K2GSubcommandWritesEquivalentIntegrals) {
  const auto m = ssh_hubbard_model(2, 1.0, 0.6, 4.0, LatticeBasis::band);
  write_pfcidump(m.integrals, (dir_ / "k.pfcidump").string());
  write_supercell_dump(SupercellDump{m.orbitals.coefficients, m.orbitals.energies, m.orbitals.overlap},
                       (dir_ / "k.scell").string());
  std::ostringstream out, err;
  ASSERT_EQ(run_k2g((dir_ / "k.pfcidump").string(), (dir_ / "k.scell").string(), (dir_ / "g.pfcidump").string(), out,
                    err),
            kExitOk)
      << err.str();
  const IntegralSet g = load_pfcidump((dir_ / "g.pfcidump").string());
  EXPECT_EQ(g.max_imaginary(), 0.0);
  EXPECT_NEAR(fci(g, 1).energies[0], fci(m.integrals, 1).energies[0], 1e-9);

  std::ostringstream fo, fe;
  ASSERT_EQ(run_fci((dir_ / "g.pfcidump").string(), 2, fo, fe), kExitOk);
  EXPECT_EQ(fo.str().rfind("E0 = -1.7440843353\nE1 = ", 0), 0u);
  EXPECT_EQ(run_fci((dir_ / "none.pfcidump").string(), 1, fo, fe), kExitConfig);
}
