#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>

#include "slqr/linalg.hpp"
#include "slqr/plant.hpp"
#include "slqr/sparsity.hpp"

namespace slqr {

Eigen::MatrixXd closed_loop(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K);

Eigen::MatrixXd eval_P(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K);
Eigen::MatrixXd eval_L(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K);

double cost_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K);

Eigen::MatrixXd grad_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K);

// Quadratic upper model of J around K_prev:
// J(K_prev) + <K - K_prev, grad J(K_prev)> + (rho/2) ||K - K_prev||_F^2.
double surrogate_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K,
                   const Eigen::Ref<const Eigen::MatrixXd>& K_prev, double rho);

double objective_F(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K,
                   const Regularizer& reg, double gamma);

// Tallies threaded through the solvers so algorithm comparisons can report
// how much linear algebra each one actually did.
struct EvalCounters {
  long lyapunov_solves = 0;
  long schur_factorizations = 0;
};

// One (plant, K) evaluation point. Factors A - B1 K once and computes P, L,
// J, and the gradient lazily, so callers pay only for what they touch:
// a gradient evaluation costs exactly two Lyapunov solves, a cost probe one.
// Instances are cheap, single-threaded, and live for one solver step.
class EvalPoint {
 public:
  EvalPoint(const Plant& plant, Eigen::MatrixXd K, EvalCounters* counters = nullptr);

  double abscissa() const { return schur_.abscissa(); }
  bool is_stabilizing() const { return schur_.is_stabilizing(); }
  const Eigen::MatrixXd& K() const { return K_; }

  // The accessors below throw NotStabilizing when the point is infeasible.
  const Eigen::MatrixXd& P() const;
  const Eigen::MatrixXd& L() const;
  double J() const;
  const Eigen::MatrixXd& grad() const;

 private:
  void require_stabilizing() const;

  const Plant* plant_;
  Eigen::MatrixXd K_;
  SchurPoint schur_;
  EvalCounters* counters_;
  mutable std::optional<Eigen::MatrixXd> P_;
  mutable std::optional<Eigen::MatrixXd> L_;
  mutable std::optional<double> J_;
  mutable std::optional<Eigen::MatrixXd> grad_;
};

}  // namespace slqr
