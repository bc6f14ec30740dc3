// Scratch probe used during development to size steps and rates.
#include <cstdio>

#include "projopt/models.hpp"
#include "projopt/solvers.hpp"
#include "projopt/spectral.hpp"

using namespace projopt;

static void probe_gp(int n_b, double alpha, int n, double beta_scf) {
  GrossPitaevskii1D model(n_b, alpha);
  const DensityMatrix start = aufbau_projector(model.core(), n, 1e-12);
  SolverConfig config;
  config.beta = beta_scf;
  config.max_iterations = 100000;
  config.tolerance = 1e-13;
  auto trace = damped_scf(model, start, config);
  std::printf("GP n_b=%d alpha=%g N=%d: scf beta=%g -> %s in %d iters\n", n_b,
              alpha, n, beta_scf, to_string(trace.termination),
              trace.iterations());
  if (!trace.converged()) return;
  const DensityMatrix p(trace.final_p);
  const auto grad = build_jacobian(model, p, JacobianKind::kGradient);
  const auto scf = build_jacobian(model, p, JacobianKind::kScf);
  std::printf("  J_grad: lambda=[%g, %g] kappa=%g beta*=%g nu=%g eta=%g\n",
              grad.lambda_min, grad.lambda_max, grad.condition_number,
              grad.optimal_beta, grad.gap, grad.coercivity);
  std::printf("  J_scf : lambda=[%g, %g] kappa=%g beta*=%g rate@%g=%g\n",
              scf.lambda_min, scf.lambda_max, scf.condition_number,
              scf.optimal_beta, beta_scf, scf.rate_at(beta_scf));
}

static void probe_chaos(double c1, double c2, std::uint64_t seed) {
  ChaosModel model(c1, c2);
  const DensityMatrix p0 = random_projector(3, 1, seed);
  SolverConfig config;
  config.beta = 1.0;
  config.max_iterations = 1500;
  config.tolerance = 1e-13;
  auto trace = roothaan_scf(model, p0, config);
  const auto& it = trace.iterates;
  double cyc2 = -1.0, cyc1 = -1.0;
  if (it.size() > 8) {
    cyc1 = (it[it.size() - 1] - it[it.size() - 2]).norm();
    cyc2 = (it[it.size() - 1] - it[it.size() - 3]).norm();
  }
  std::printf(
      "chaos c1=%.3f c2=%g seed=%llu: %s iters=%d |P-P_prev|=%.3e "
      "|P-P_prev2|=%.3e rho1=%.6f\n",
      c1, c2, static_cast<unsigned long long>(seed),
      to_string(trace.termination), trace.iterations(), cyc1, cyc2,
      trace.final_p(0, 0));
}

int main() {
  setvbuf(stdout, nullptr, _IONBF, 0);
  probe_gp(40, 50.0, 1, 0.1);
  probe_gp(40, 50.0, 1, 0.05);
  probe_gp(100, 50.0, 1, 0.1);
  probe_gp(40, 5.0, 2, 0.1);
  probe_gp(40, 8.0, 2, 0.1);
  try { probe_gp(100, 30.0, 2, 0.1); } catch (const Error& e) { std::printf("  (jacobian: %s)\n", e.what()); }
  for (double c1 : {0.25, 0.30, 0.35, 0.40, 0.45, 0.50}) {
    for (std::uint64_t seed : {1ULL, 8ULL, 33ULL}) probe_chaos(c1, 0.0, seed);
  }
  return 0;
}
