#pragma once

#include <Eigen/Dense>

#include "slqr/errors.hpp"

namespace slqr {

// Closed-loop matrices with spectral abscissa below -kStabilityMargin count as
// stabilizing; anything above is treated as on or past the stability boundary.
inline constexpr double kStabilityMargin = 1e-12;

// Condition estimates above this make a Lyapunov solve a SingularSystem error.
inline constexpr double kSingularCondition = 1e14;

struct SpectralReport {
  double abscissa = 0.0;  // max real part over eigenvalues
  bool is_hurwitz = false;
};

SpectralReport spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& M);

// Solves Acl' X + X Acl + Rhs = 0 for symmetric Rhs (the equation defining P).
// Requires Acl Hurwitz. The result is symmetrized.
Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                               const Eigen::Ref<const Eigen::MatrixXd>& Rhs);

// Solves Acl X + X Acl' + Rhs = 0 (the equation defining L).
Eigen::MatrixXd solve_dual_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                                    const Eigen::Ref<const Eigen::MatrixXd>& Rhs);

// Kronecker-vectorization route for the same equation as solve_lyapunov:
// (I ⊗ Acl' + Acl' ⊗ I) vec(X) = -vec(Rhs), dense LU. O(n^6), fine up to
// desk scale; kept as an independent cross-check of the Schur route.
Eigen::MatrixXd solve_lyapunov_kron(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                                    const Eigen::Ref<const Eigen::MatrixXd>& Rhs);

// Stabilizing solution of A'P + PA - P B1 R^-1 B1' P + Q = 0 via Kleinman
// iteration, initialized with Bass's method when A itself is unstable.
Eigen::MatrixXd solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B1,
                           const Eigen::Ref<const Eigen::MatrixXd>& Q,
                           const Eigen::Ref<const Eigen::MatrixXd>& R);

// LQR gain K0 = R^-1 B1' P from solve_care.
Eigen::MatrixXd care_gain(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& B1,
                          const Eigen::Ref<const Eigen::MatrixXd>& Q,
                          const Eigen::Ref<const Eigen::MatrixXd>& R);

// One complex Schur factorization of a closed-loop matrix, reused for both
// Lyapunov equations at the same point. This is the solver-facing kernel;
// the free functions above wrap it.
class SchurPoint {
 public:
  explicit SchurPoint(const Eigen::Ref<const Eigen::MatrixXd>& Acl);

  double abscissa() const { return abscissa_; }
  bool is_hurwitz() const { return abscissa_ < 0.0; }
  bool is_stabilizing() const { return abscissa_ < -kStabilityMargin; }

  // Acl' X + X Acl + Rhs = 0 (throws NotHurwitz / SingularSystem).
  Eigen::MatrixXd solve_primal(const Eigen::Ref<const Eigen::MatrixXd>& Rhs) const;
  // Acl X + X Acl' + Rhs = 0.
  Eigen::MatrixXd solve_dual(const Eigen::Ref<const Eigen::MatrixXd>& Rhs) const;

 private:
  void require_solvable() const;

  Eigen::MatrixXcd U_;  // unitary
  Eigen::MatrixXcd T_;  // upper triangular
  double abscissa_;
  double cond_estimate_;
};

}  // namespace slqr
