#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "slqr/objective.hpp"
#include "slqr/plant.hpp"
#include "slqr/sparsity.hpp"

namespace slqr {

struct IstaConfig {
  double gamma = 1.0;
  double rho0 = 100.0;
  double alpha = 1.5;  // backtracking multiplier, > 1
  double tol = 1e-4;
  int max_iter = 10000;
  int max_backtracks = 60;
  Regularizer regularizer;
  // Reject a candidate when it is unstable OR violates the surrogate bound.
  // false accepts any stabilizing candidate without the surrogate test; the
  // monotone-trace guarantee holds in strict mode only.
  bool strict_acceptance = true;
  // Scales the FISTA extrapolation coefficient; 0 reduces fista_solve to
  // ista_solve step for step. Ignored by ista_solve.
  double momentum_scale = 1.0;
};

struct IspaConfig {
  Ball radius;
  double rho0 = 1.0;
  double alpha = 0.7;      // step shrink factor, in (0,1)
  double armijo_c = 1e-4;  // sufficient-decrease constant
  double tol = 1e-4;
  int max_iter = 10000;
  int max_backtracks = 60;
};

enum class SolveStatus { Converged, MaxIterReached, Stalled };

struct TraceEntry {
  int iter = 0;
  double F = 0.0;
  double J = 0.0;
  double G = 0.0;
  double rho_or_step = 0.0;
  long nnz = 0;
  double abscissa = 0.0;
  int backtracks = 0;
  bool exhausted = false;  // backtracking gave up; iterate unchanged
};

struct SolveTrace {
  std::string algorithm;
  std::vector<TraceEntry> entries;
  SolveStatus status = SolveStatus::MaxIterReached;
  EvalCounters counters;
  std::vector<std::string> warnings;

  int iterations() const { return static_cast<int>(entries.size()) - 1; }
  bool converged() const { return status == SolveStatus::Converged; }
};

struct SolveResult {
  Gain k_final;
  SolveTrace trace;
};

// One proximal-gradient candidate at penalty scale rho (no stability check;
// the solve loop owns acceptance). Weighted regularizers use the weights as
// passed in.
Eigen::MatrixXd ista_step(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K_t,
                          double rho, double gamma, const Regularizer& reg);

SolveResult ista_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const IstaConfig& config);

SolveResult fista_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const IstaConfig& config);

// Stabilizing point inside the ball, via gamma-homotopy ista solves when K0
// itself is outside.
Gain ispa_find_feasible(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const Ball& ball);

SolveResult ispa_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const IspaConfig& config);

}  // namespace slqr
