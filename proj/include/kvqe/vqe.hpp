#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include "kvqe/hamiltonian.hpp"
#include "kvqe/optimizer.hpp"
#include "kvqe/pool.hpp"
#include "kvqe/state.hpp"

namespace kvqe {

using Eigen::VectorXcd;

/// Hamiltonian, reference and symmetry sector of one problem instance. All
/// VQE work happens in sector coordinates.
struct VqeSystem {
  Sector sector;
  CompactOperator h;
  ReferenceDeterminant reference;
  VectorXcd ref;
  int n_qubits = 0;

  static VqeSystem build(const IntegralSet &ints, std::optional<ReferenceDeterminant> reference = std::nullopt) {
    VqeSystem s;
    s.n_qubits = ints.n_qubits();
    s.sector = Sector::particles(s.n_qubits, ints.nelec, ints.ms2);
    if (s.sector.size() == 0)
      throw InvalidInput("empty symmetry sector");
    s.h = CompactOperator::from(build_hamiltonian(ints), s.sector);
    s.reference = reference ? *reference : aufbau_reference(ints);
    const auto pos = s.sector.position(static_cast<std::uint32_t>(s.reference.bitstring()));
    if (!pos)
      throw InvalidInput("reference determinant lies outside the (N, Sz) sector");
    s.ref = VectorXcd::Zero(static_cast<Eigen::Index>(s.sector.size()));
    s.ref(static_cast<Eigen::Index>(*pos)) = 1.0;
    return s;
  }

  [[nodiscard]] std::vector<CompactOperator> compile(const OperatorPool &pool) const {
    std::vector<CompactOperator> out;
    out.reserve(pool.size());
    for (const auto &g : pool)
      out.push_back(CompactOperator::from(g.tau, sector));
    return out;
  }

  [[nodiscard]] StateVector full_state(const VectorXcd &v) const {
    return StateVector(n_qubits, from_sector(v, sector));
  }
  [[nodiscard]] VectorXcd compact_state(const StateVector &s) const { return to_sector(s.amplitudes(), sector); }
};

inline double energy(const CompactOperator &h, const VectorXcd &v) { return v.dot(h.matrix * v).real(); }

/// exp_of_sum: exp(sum_u t_u tau_u)|ref> (or its Trotterization, per the
/// evolution plan). product: prod_l exp(t_l tau_l)|ref>, factor 0 applied
/// first; this is the ADAPT ansatz.
enum class AnsatzForm { exp_of_sum, product };
enum class GradientMethod { finite_difference, analytic };

inline constexpr double kFiniteDifferenceStep = 1e-5;

struct Ansatz {
  AnsatzForm form = AnsatzForm::exp_of_sum;
  std::vector<const CompactOperator *> generators;
  EvolutionPlan plan;

  [[nodiscard]] VectorXcd state(std::span<const double> params, const VectorXcd &ref) const {
    if (params.size() != generators.size())
      throw InvalidInput("parameter count differs from generator count");
    const double tol = plan.taylor_tolerance;
    VectorXcd s = ref;
    if (form == AnsatzForm::product) {
      for (std::size_t l = 0; l < generators.size(); ++l)
        if (params[l] != 0.0)
          s = expm_multiply(*generators[l], params[l], s, tol);
      return s;
    }
    if (generators.empty())
      return s;
    if (plan.mode == EvolutionPlan::Mode::exact) {
      SectorMatrix sum(ref.size(), ref.size());
      for (std::size_t u = 0; u < generators.size(); ++u)
        if (params[u] != 0.0)
          sum += params[u] * generators[u]->matrix;
      return expm_multiply(CompactOperator(std::move(sum)), 1.0, s, tol);
    }
    for (int step = 0; step < plan.trotter_steps; ++step)
      for (std::size_t u = 0; u < generators.size(); ++u)
        s = expm_multiply(*generators[u], params[u] / plan.trotter_steps, s, tol);
    return s;
  }
};

/// Gradient of <psi|H|psi> for a product ansatz, by a forward state sweep and
/// a backward sweep of both the state and H|psi>:
///   G_l = 2 Re <lambda_l| tau_l |phi_l>,  phi_l = U_l..U_1|ref>,
///   lambda_l = U_{l+1}^dag..U_k^dag H|psi>.
inline std::vector<double> analytic_gradient(const CompactOperator &h, const Ansatz &ansatz,
                                             std::span<const double> params, const VectorXcd &ref,
                                             double *energy_out = nullptr) {
  if (ansatz.form != AnsatzForm::product)
    throw InvalidInput("analytic gradients need the product ansatz; use finite differences");
  const auto &gens = ansatz.generators;
  const double tol = ansatz.plan.taylor_tolerance;
  VectorXcd phi = ansatz.state(params, ref);
  VectorXcd lambda = h.matrix * phi;
  if (energy_out)
    *energy_out = phi.dot(lambda).real();
  std::vector<double> grad(gens.size());
  VectorXcd chi;
  for (std::size_t l = gens.size(); l-- > 0;) {
    chi.noalias() = gens[l]->matrix * phi;
    grad[l] = 2.0 * lambda.dot(chi).real();
    if (l > 0 && params[l] != 0.0) {
      phi = expm_multiply(*gens[l], -params[l], phi, tol);
      lambda = expm_multiply(*gens[l], -params[l], lambda, tol);
    }
  }
  return grad;
}

struct MinimizeResult {
  double energy = 0.0;
  std::vector<double> params;
  bool converged = false;
  int evaluations = 0;
  int iterations = 0;
  std::string message;
};

/// Variational minimization of <psi(t)|H|psi(t)> starting from `init`.
inline MinimizeResult minimize(const CompactOperator &h, const Ansatz &ansatz, std::vector<double> init,
                               const VectorXcd &ref, const OptimizerOptions &opt = {},
                               GradientMethod method = GradientMethod::finite_difference) {
  if (init.size() != ansatz.generators.size())
    throw InvalidInput("initial parameter count differs from generator count");
  if (method == GradientMethod::analytic && ansatz.form != AnsatzForm::product)
    throw InvalidInput("analytic gradients need the product ansatz; use finite differences");
  auto value = [&](std::span<const double> t) { return energy(h, ansatz.state(t, ref)); };
  Objective obj = [&](std::span<const double> t, std::span<double> g) {
    if (method == GradientMethod::analytic) {
      double e = 0.0;
      const auto grad = analytic_gradient(h, ansatz, t, ref, &e);
      std::copy(grad.begin(), grad.end(), g.begin());
      return e;
    }
    central_difference(value, t, g, kFiniteDifferenceStep);
    return value(t);
  };
  const OptimizeResult r = bfgs(obj, std::move(init), opt);
  MinimizeResult out;
  out.params = r.x;
  out.energy = value(out.params);
  out.converged = r.converged;
  out.evaluations = r.evaluations;
  out.iterations = r.iterations;
  out.message = r.message;
  return out;
}

struct UccResult {
  MinimizeResult fit;
  VectorXcd state;
  int n_parameters = 0;
};

/// UCC-VQE: exp(sum_u t_u tau_u)|ref> (or its Trotterization) optimized from
/// t = 0 with central-difference gradients.
inline UccResult ucc_vqe(const CompactOperator &h, std::span<const CompactOperator> pool, const VectorXcd &ref,
                         EvolutionPlan plan = EvolutionPlan::exact(), const OptimizerOptions &opt = {}) {
  Ansatz ansatz{AnsatzForm::exp_of_sum, {}, plan};
  for (const auto &g : pool)
    ansatz.generators.push_back(&g);
  UccResult out;
  out.n_parameters = static_cast<int>(pool.size());
  out.fit = minimize(h, ansatz, std::vector<double>(pool.size(), 0.0), ref, opt, GradientMethod::finite_difference);
  out.state = ansatz.state(out.fit.params, ref);
  return out;
}

/// Commutator residuals R_u = <psi|[H, tau_u]|psi>. Both operator orderings
/// are applied explicitly; the imaginary part of their difference is a
/// consistency check and must stay below 1e-8.
inline std::vector<double> pre_estimated_gradients(const VectorXcd &psi, const CompactOperator &h,
                                                   std::span<const CompactOperator> pool) {
  const VectorXcd hpsi = h.matrix * psi;
  std::vector<double> r(pool.size());
  std::vector<double> residue(pool.size());
  parallel_for(
      pool.size(),
      [&](std::size_t b, std::size_t e) {
        VectorXcd chi, tau_h;
        for (std::size_t u = b; u < e; ++u) {
          chi.noalias() = pool[u].matrix * psi;
          tau_h.noalias() = pool[u].matrix * hpsi;
          const cplx v = hpsi.dot(chi) - psi.dot(tau_h);
          r[u] = v.real();
          residue[u] = v.imag();
        }
      },
      8);
  for (std::size_t u = 0; u < pool.size(); ++u)
    if (std::abs(residue[u]) > 1e-8)
      throw NumericalError("commutator expectation has imaginary part " + std::to_string(residue[u]) +
                           " for generator " + std::to_string(u));
  return r;
}

struct AdaptConfig {
  double epsilon = 1e-3;
  int batch = 1;
  int max_iterations = 200;
  bool readmit = true;
  OptimizerOptions optimizer;

  /// "ADAPT(m)" -> epsilon = 10^-m; "ADAPT(X)" -> epsilon = 2e-4.
  static AdaptConfig preset(const std::string &name) {
    AdaptConfig c;
    static const std::regex re(R"(ADAPT\((X|\d+)\))", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(name, m, re))
      throw InvalidInput("unknown ADAPT preset '" + name + "'");
    const std::string arg = m[1].str();
    c.epsilon = (arg == "X" || arg == "x") ? 2e-4 : std::pow(10.0, -std::stoi(arg));
    return c;
  }

  void validate() const {
    if (!(epsilon > 0.0))
      throw InvalidInput("ADAPT epsilon must be positive");
    if (batch < 1)
      throw InvalidInput("ADAPT batch must be >= 1");
    if (max_iterations < 0)
      throw InvalidInput("ADAPT max_iterations must be >= 0");
  }
};

struct AnsatzTrace {
  std::vector<int> generator_ids;
  std::vector<double> parameters;
  std::vector<double> energy_history;        // entry 0: reference energy
  std::vector<double> residual_norm_history; // ||R|| before each growth step
  std::vector<double> final_residuals;
  VectorXcd state;
  double energy = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string message;
};

/// Indices of the `count` largest |r_u|, ties to the lowest index.
inline std::vector<int> select_largest(std::span<const double> r, int count, const std::vector<bool> &excluded) {
  std::vector<int> idx;
  for (std::size_t u = 0; u < r.size(); ++u)
    if (excluded.empty() || !excluded[u])
      idx.push_back(static_cast<int>(u));
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return std::abs(r[a]) > std::abs(r[b]); });
  if (static_cast<int>(idx.size()) > count)
    idx.resize(static_cast<std::size_t>(count));
  return idx;
}

/// ADAPT-VQE: grow a product ansatz from `pool` by the largest commutator
/// residuals, re-optimizing every parameter after each growth step, until
/// ||R||_2 < epsilon.
inline AnsatzTrace adapt_vqe(const CompactOperator &h, std::span<const CompactOperator> pool, const VectorXcd &ref,
                             const AdaptConfig &cfg) {
  cfg.validate();
  if (pool.empty())
    throw InvalidInput("ADAPT needs a nonempty operator pool");
  AnsatzTrace tr;
  Ansatz ansatz{AnsatzForm::product, {}, EvolutionPlan::exact()};
  tr.state = ref;
  tr.energy = energy(h, ref);
  tr.energy_history.push_back(tr.energy);
  std::vector<bool> chosen(pool.size(), false);
  for (int iter = 0;; ++iter) {
    tr.final_residuals = pre_estimated_gradients(tr.state, h, pool);
    double norm2 = 0.0;
    for (double x : tr.final_residuals)
      norm2 += x * x;
    const double norm = std::sqrt(norm2);
    tr.residual_norm_history.push_back(norm);
    tr.iterations = iter;
    if (norm < cfg.epsilon) {
      tr.converged = true;
      tr.message = "residual norm below epsilon";
      break;
    }
    if (iter >= cfg.max_iterations) {
      tr.message = "maximum iterations reached";
      break;
    }
    const auto picks = select_largest(tr.final_residuals, cfg.batch, cfg.readmit ? std::vector<bool>{} : chosen);
    if (picks.empty()) {
      tr.message = "no admissible generator left";
      break;
    }
    for (int u : picks) {
      tr.generator_ids.push_back(u);
      tr.parameters.push_back(0.0);
      ansatz.generators.push_back(&pool[static_cast<std::size_t>(u)]);
      chosen[static_cast<std::size_t>(u)] = true;
    }
    const MinimizeResult m = minimize(h, ansatz, tr.parameters, ref, cfg.optimizer, GradientMethod::analytic);
    tr.parameters = m.params;
    tr.state = ansatz.state(tr.parameters, ref);
    tr.energy = m.energy;
    tr.energy_history.push_back(tr.energy);
  }
  return tr;
}

} // namespace kvqe
