#include "slqr/objective.hpp"

#include <cmath>
#include <utility>

namespace slqr {

void Plant::validate() const {
  const int nn = n();
  const int mm = m();
  if (A.rows() != nn || A.cols() != nn) throw NonSquare("plant: A must be square");
  if (B1.rows() != nn) throw DimensionMismatch("plant: B1 row count != n");
  if (B2.rows() != nn) throw DimensionMismatch("plant: B2 row count != n");
  if (Q.rows() != nn || Q.cols() != nn) throw DimensionMismatch("plant: Q shape");
  if (R.rows() != mm || R.cols() != mm) throw DimensionMismatch("plant: R shape");
  if (!A.allFinite() || !B1.allFinite() || !B2.allFinite() || !Q.allFinite() || !R.allFinite())
    throw InputError("plant: non-finite entries");

  const double tol = 1e-10;
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, Q.norm()))
    throw InvalidWeights("plant: Q is not symmetric");
  if ((R - R.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, R.norm()))
    throw InvalidWeights("plant: R is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(Q, Eigen::EigenvaluesOnly);
  if (qe.eigenvalues().minCoeff() < -tol * std::max(1.0, Q.norm()))
    throw InvalidWeights("plant: Q is not positive semidefinite");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> re(R, Eigen::EigenvaluesOnly);
  if (re.eigenvalues().minCoeff() <= tol * std::max(1.0, R.norm()))
    throw InvalidWeights("plant: R is not positive definite");

  if (partition.total_rows() != mm)
    throw DimensionMismatch("plant: partition row sizes do not sum to m");
  if (partition.total_cols() != nn)
    throw DimensionMismatch("plant: partition col sizes do not sum to n");
}

Eigen::MatrixXd closed_loop(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K) {
  if (K.rows() != plant.m() || K.cols() != plant.n())
    throw DimensionMismatch("closed_loop: K must be m x n");
  return plant.A - plant.B1 * K;
}

EvalPoint::EvalPoint(const Plant& plant, Eigen::MatrixXd K, EvalCounters* counters)
    : plant_(&plant), K_(std::move(K)), schur_(closed_loop(plant, K_)), counters_(counters) {
  if (counters_) ++counters_->schur_factorizations;
}

void EvalPoint::require_stabilizing() const {
  if (!schur_.is_stabilizing())
    throw NotStabilizing("closed loop has spectral abscissa " + std::to_string(schur_.abscissa()));
}

const Eigen::MatrixXd& EvalPoint::P() const {
  if (!P_) {
    require_stabilizing();
    P_ = schur_.solve_primal(plant_->Q + K_.transpose() * plant_->R * K_);
    if (counters_) ++counters_->lyapunov_solves;
  }
  return *P_;
}

const Eigen::MatrixXd& EvalPoint::L() const {
  if (!L_) {
    require_stabilizing();
    L_ = schur_.solve_dual(plant_->B2 * plant_->B2.transpose());
    if (counters_) ++counters_->lyapunov_solves;
  }
  return *L_;
}

double EvalPoint::J() const {
  if (!J_) J_ = (plant_->B2.transpose() * P() * plant_->B2).trace();
  return *J_;
}

const Eigen::MatrixXd& EvalPoint::grad() const {
  // 2 (R K - B1' P) L. Deriving dJ through the P equation gives the source
  // term dK'(RK - B1'P) + (K'R - PB1)dK, so this order is the one that
  // matches central finite differences of J; the opposite order is -grad.
  if (!grad_) grad_ = 2.0 * (plant_->R * K_ - plant_->B1.transpose() * P()) * L();
  return *grad_;
}

Eigen::MatrixXd eval_P(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return EvalPoint(plant, K).P();
}

Eigen::MatrixXd eval_L(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return EvalPoint(plant, K).L();
}

double cost_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return EvalPoint(plant, K).J();
}

Eigen::MatrixXd grad_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return EvalPoint(plant, K).grad();
}

double surrogate_J(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K,
                   const Eigen::Ref<const Eigen::MatrixXd>& K_prev, double rho) {
  if (!(rho > 0.0)) throw InputError("surrogate_J: rho must be positive");
  EvalPoint at_prev(plant, K_prev);
  Eigen::MatrixXd dK = K - K_prev;
  return at_prev.J() + (dK.array() * at_prev.grad().array()).sum() +
         0.5 * rho * dK.squaredNorm();
}

double objective_F(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K,
                   const Regularizer& reg, double gamma) {
  if (gamma < 0.0) throw InputError("objective_F: gamma must be nonnegative");
  return cost_J(plant, K) + gamma * g_value(K, reg, plant.partition);
}

}  // namespace slqr
