#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "slqr/baselines.hpp"
#include "slqr/systems.hpp"

using namespace slqr;
using test::scalar1x1;
using test::scalar_plant;

namespace {

long offdiag_nnz(const Eigen::MatrixXd& K, const BlockPartition& p) {
  long count = 0;
  for (int i = 0; i < p.block_rows(); ++i)
    for (int j = 0; j < p.block_cols(); ++j)
      if (i != j) count += nnz(p.block(K, i, j));
  return count;
}

}  // namespace

TEST_CASE("admm F-step prox arithmetic surfaces in the first iterate") {
  // With the K-step disabled, iteration one computes F = S_{gamma/rho}(K0)
  // and reports it as the (stabilizing) sparse gain.
  Plant s = scalar_plant();
  AdmmConfig cfg;
  cfg.gamma = 0.1;
  cfg.rho = 1.0;
  cfg.inner_steps = 0;
  cfg.max_iter = 1;
  SolveResult res = admm_solve(s, scalar1x1(1.25), cfg);
  CHECK(res.k_final.K(0, 0) == doctest::Approx(1.15).epsilon(1e-15));
}

TEST_CASE("admm with gamma 0 recovers the LQR optimum") {
  Plant p = gen_multiagent(2);
  Eigen::MatrixXd K_lqr = care_gain(p.A, p.B1, p.Q, p.R);
  AdmmConfig cfg;
  cfg.gamma = 0.0;
  SolveResult res = admm_solve(p, 1.05 * K_lqr, cfg);
  CHECK(res.trace.converged());
  CHECK((res.k_final.K - K_lqr).norm() <= 1e-2 * std::max(1.0, K_lqr.norm()));
}

TEST_CASE("admm tracks ista on cost and sparsity at matched gamma") {
  Plant p = gen_multiagent(2);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);

  IstaConfig icfg;
  icfg.gamma = 1.0;
  SolveResult ista = ista_solve(p, K0, icfg);

  AdmmConfig acfg;
  acfg.gamma = 1.0;
  SolveResult admm = admm_solve(p, K0, acfg);

  double J_ista = ista.k_final.J.value();
  double J_admm = admm.k_final.J.value();
  CHECK(std::abs(J_ista - J_admm) / J_ista <= 0.10);
  // Supports need not match exactly; both should land well below dense.
  CHECK(nnz(ista.k_final.K) <= K0.size() / 2);
  CHECK(nnz(admm.k_final.K) <= K0.size() / 2);
}

TEST_CASE("admm trace shares the solver schema and stays feasible") {
  Plant p = gen_multiagent(2);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  AdmmConfig cfg;
  cfg.gamma = 1.0;
  SolveResult res = admm_solve(p, K0, cfg);
  REQUIRE(!res.trace.entries.empty());
  CHECK(res.trace.algorithm == "admm");
  for (std::size_t i = 0; i < res.trace.entries.size(); ++i) {
    const TraceEntry& e = res.trace.entries[i];
    CHECK(e.iter == static_cast<int>(i));
    CHECK(e.abscissa < 0.0);  // the dense iterate K stays stabilizing
    CHECK(e.J > 0.0);
    CHECK(e.G >= 0.0);
  }
  CHECK(res.k_final.abscissa < 0.0);
  CHECK(res.trace.counters.lyapunov_solves > 0);
}

TEST_CASE("admm input validation") {
  Plant s = scalar_plant();
  AdmmConfig cfg;
  CHECK_THROWS_AS(admm_solve(s, scalar1x1(-3.0), cfg), InitNotStabilizing);
  AdmmConfig bad = cfg;
  bad.rho = 0.0;
  CHECK_THROWS_AS(admm_solve(s, scalar1x1(0.0), bad), InputError);
  bad = cfg;
  bad.regularizer.kind = RegKind::WeightedL1;
  CHECK_THROWS_AS(admm_solve(s, scalar1x1(0.0), bad), WrongKind);
}

TEST_CASE("grasp with a loose budget reduces to gradient descent onto the optimum") {
  Plant p = gen_multiagent(2);
  Eigen::MatrixXd K_lqr = care_gain(p.A, p.B1, p.Q, p.R);
  GraspConfig cfg;
  cfg.s = 12;  // every off-diagonal element of the 4x6 gain may stay
  SolveResult res = grasp_solve(p, K_lqr, cfg);
  CHECK(res.trace.converged());
  CHECK((res.k_final.K - K_lqr).norm() <= 1e-2 * std::max(1.0, K_lqr.norm()));
}

TEST_CASE("grasp with budget 0 and an exempt diagonal returns a block-diagonal gain") {
  Plant p = gen_multiagent(3);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  GraspConfig cfg;
  cfg.s = 0;
  SolveResult res = grasp_solve(p, K0, cfg);
  CHECK(offdiag_nnz(res.k_final.K, p.partition) == 0);
  CHECK(res.k_final.abscissa < 0.0);
}

TEST_CASE("grasp respects the off-diagonal budget throughout") {
  Plant p = gen_multiagent(3);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  GraspConfig cfg;
  cfg.s = 10;  // of 36 off-diagonal elements
  SolveResult res = grasp_solve(p, K0, cfg);
  CHECK(offdiag_nnz(res.k_final.K, p.partition) <= 10);
  for (const TraceEntry& e : res.trace.entries) {
    CHECK(e.abscissa < 0.0);
    CHECK(e.G <= 10.0);  // G records the used off-diagonal budget
  }
}

TEST_CASE("grasp block mode prunes whole coupling blocks") {
  Plant p = gen_multiagent(3);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  GraspConfig cfg;
  cfg.s = 1;
  cfg.block_mode = true;
  SolveResult res = grasp_solve(p, K0, cfg);
  long live_blocks = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j && p.partition.block(res.k_final.K, i, j).norm() > 0.0) ++live_blocks;
  CHECK(live_blocks <= 1);
  CHECK(res.k_final.abscissa < 0.0);
}

TEST_CASE("grasp without the diagonal exemption can empty the gain entirely") {
  // The two-agent chain is open-loop stable, so K = 0 is feasible and budget
  // zero over all positions must land exactly there.
  Plant p = gen_multiagent(2);
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  GraspConfig cfg;
  cfg.s = 0;
  cfg.exempt_diagonal = false;
  SolveResult res = grasp_solve(p, K0, cfg);
  CHECK(res.k_final.K.norm() == 0.0);
  CHECK(res.k_final.abscissa < 0.0);
}

TEST_CASE("grasp input validation") {
  Plant s = scalar_plant();
  GraspConfig cfg;
  CHECK_THROWS_AS(grasp_solve(s, scalar1x1(-3.0), cfg), InitNotStabilizing);
  GraspConfig bad = cfg;
  bad.s = -1;
  CHECK_THROWS_AS(grasp_solve(s, scalar1x1(0.0), bad), InputError);
}
