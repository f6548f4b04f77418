#pragma once

#include <Eigen/Dense>

#include "slqr/solvers.hpp"

namespace slqr {

struct AdmmConfig {
  double gamma = 1.0;
  double rho = 100.0;  // augmented penalty
  double eps_abs = 1e-4;
  double eps_rel = 1e-2;
  int max_iter = 5000;
  int inner_steps = 50;
  double inner_tol = 1e-6;
  Regularizer regularizer;  // L1 or BlockL1
};

struct GraspConfig {
  long s = 0;  // off-diagonal nonzero budget (elements, or blocks in block mode)
  double tol = 1e-4;
  int max_iter = 1000;
  int inner_steps = 25;
  bool exempt_diagonal = true;
  bool block_mode = false;  // prune whole off-diagonal blocks instead of elements
};

// Consensus ADMM on J(K) + gamma G(F) with K = F. The K-step runs an inner
// gradient loop with stability backtracking; the F-step is the shrink prox in
// closed form. The trace's J/abscissa track K, G/nnz track the sparse copy F.
SolveResult admm_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const AdmmConfig& config);

// Gradient support pursuit under an l0 budget on off-diagonal positions.
SolveResult grasp_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const GraspConfig& config);

}  // namespace slqr
