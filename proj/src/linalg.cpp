#include "slqr/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace slqr {

namespace {

void check_square_finite(const Eigen::Ref<const Eigen::MatrixXd>& M, const char* who) {
  if (M.rows() != M.cols())
    throw NonSquare(std::string(who) + ": matrix is " + std::to_string(M.rows()) + "x" +
                    std::to_string(M.cols()));
  if (!M.allFinite()) throw InputError(std::string(who) + ": non-finite entries");
}

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& X) {
  return 0.5 * (X + X.transpose());
}

}  // namespace

SpectralReport spectral_abscissa(const Eigen::Ref<const Eigen::MatrixXd>& M) {
  check_square_finite(M, "spectral_abscissa");
  SpectralReport r;
  if (M.rows() == 0) return r;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw NumericalError("spectral_abscissa: eigensolver did not converge");
  r.abscissa = es.eigenvalues().real().maxCoeff();
  r.is_hurwitz = r.abscissa < 0.0;
  return r;
}

SchurPoint::SchurPoint(const Eigen::Ref<const Eigen::MatrixXd>& Acl) {
  check_square_finite(Acl, "SchurPoint");
  const Eigen::Index n = Acl.rows();
  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(Acl.cast<std::complex<double>>(),
                                              /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw NumericalError("SchurPoint: Schur decomposition did not converge");
  U_ = schur.matrixU();
  T_ = schur.matrixT();

  abscissa_ = -std::numeric_limits<double>::infinity();
  double max_mod = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    abscissa_ = std::max(abscissa_, T_(i, i).real());
    max_mod = std::max(max_mod, std::abs(T_(i, i)));
  }
  // Conditioning of the Lyapunov operator, estimated from the eigenvalue sums
  // lambda_i + conj(lambda_j) that appear as solve pivots.
  double min_sum = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      min_sum = std::min(min_sum, std::abs(T_(i, i) + std::conj(T_(j, j))));
  cond_estimate_ = (min_sum > 0.0) ? (2.0 * max_mod) / min_sum
                                   : std::numeric_limits<double>::infinity();
}

void SchurPoint::require_solvable() const {
  if (abscissa_ >= 0.0)
    throw NotHurwitz("Lyapunov solve: closed loop has spectral abscissa " +
                     std::to_string(abscissa_));
  if (cond_estimate_ > kSingularCondition)
    throw SingularSystem("Lyapunov solve: condition estimate " +
                         std::to_string(cond_estimate_));
}

// Both solves work in Schur coordinates, Y = U^* X U, F = U^* Rhs U, and walk
// the columns of the triangular equation once.

Eigen::MatrixXd SchurPoint::solve_dual(const Eigen::Ref<const Eigen::MatrixXd>& Rhs) const {
  require_solvable();
  const Eigen::Index n = T_.rows();
  if (Rhs.rows() != n || Rhs.cols() != n)
    throw DimensionMismatch("solve_dual: Rhs shape mismatch");
  // T Y + Y T^* + F = 0; column k depends on columns k+1..n-1.
  Eigen::MatrixXcd F = U_.adjoint() * Rhs.cast<std::complex<double>>() * U_;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd Tshift = T_;
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    Eigen::VectorXcd rhs = -F.col(k);
    for (Eigen::Index j = k + 1; j < n; ++j) rhs -= std::conj(T_(k, j)) * Y.col(j);
    Tshift.diagonal() = T_.diagonal().array() + std::conj(T_(k, k));
    Y.col(k) = Tshift.triangularView<Eigen::Upper>().solve(rhs);
  }
  Eigen::MatrixXd X = (U_ * Y * U_.adjoint()).real();
  return symmetrized(X);
}

Eigen::MatrixXd SchurPoint::solve_primal(const Eigen::Ref<const Eigen::MatrixXd>& Rhs) const {
  require_solvable();
  const Eigen::Index n = T_.rows();
  if (Rhs.rows() != n || Rhs.cols() != n)
    throw DimensionMismatch("solve_primal: Rhs shape mismatch");
  // T^* Y + Y T + F = 0; column k depends on columns 0..k-1.
  Eigen::MatrixXcd F = U_.adjoint() * Rhs.cast<std::complex<double>>() * U_;
  Eigen::MatrixXcd Y = Eigen::MatrixXcd::Zero(n, n);
  Eigen::MatrixXcd Tadj = T_.adjoint();
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXcd rhs = -F.col(k);
    for (Eigen::Index j = 0; j < k; ++j) rhs -= T_(j, k) * Y.col(j);
    Tadj.diagonal() = T_.diagonal().array().conjugate() + T_(k, k);
    Y.col(k) = Tadj.triangularView<Eigen::Lower>().solve(rhs);
  }
  Eigen::MatrixXd X = (U_ * Y * U_.adjoint()).real();
  return symmetrized(X);
}

Eigen::MatrixXd solve_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                               const Eigen::Ref<const Eigen::MatrixXd>& Rhs) {
  return SchurPoint(Acl).solve_primal(Rhs);
}

Eigen::MatrixXd solve_dual_lyapunov(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                                    const Eigen::Ref<const Eigen::MatrixXd>& Rhs) {
  return SchurPoint(Acl).solve_dual(Rhs);
}

Eigen::MatrixXd solve_lyapunov_kron(const Eigen::Ref<const Eigen::MatrixXd>& Acl,
                                    const Eigen::Ref<const Eigen::MatrixXd>& Rhs) {
  check_square_finite(Acl, "solve_lyapunov_kron");
  const Eigen::Index n = Acl.rows();
  if (Rhs.rows() != n || Rhs.cols() != n)
    throw DimensionMismatch("solve_lyapunov_kron: Rhs shape mismatch");
  SpectralReport rep = spectral_abscissa(Acl);
  if (rep.abscissa >= 0.0)
    throw NotHurwitz("solve_lyapunov_kron: spectral abscissa " + std::to_string(rep.abscissa));

  // (I ⊗ Acl') vec(X) covers Acl'X, (Acl' ⊗ I) vec(X) covers X Acl.
  Eigen::MatrixXd At = Acl.transpose();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) M.block(j * n, j * n, n, n) = At;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      M.block(i * n, j * n, n, n).diagonal().array() += At(i, j);

  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(Rhs.data(), n * n);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(M);
  double rcond = lu.rcond();
  if (!(rcond > 1.0 / kSingularCondition))
    throw SingularSystem("solve_lyapunov_kron: reciprocal condition " + std::to_string(rcond));
  Eigen::VectorXd x = lu.solve(rhs);
  Eigen::MatrixXd X = Eigen::Map<Eigen::MatrixXd>(x.data(), n, n);
  return symmetrized(X);
}

namespace {

// Bass's stabilizing initial gain: with beta > ||A||_F, -(A + beta I) is
// Hurwitz, and K = B1' Y^-1 with (A+beta I)Y + Y(A+beta I)' = 2 B1 B1'
// stabilizes (A, B1) whenever the pair is controllable.
Eigen::MatrixXd bass_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B1) {
  const Eigen::Index n = A.rows();
  double beta = A.norm() + 1.0;
  Eigen::MatrixXd shifted = -(A + beta * Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd Y = solve_dual_lyapunov(shifted, 2.0 * B1 * B1.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Y);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    // Stabilizable-but-uncontrollable pairs can make Y singular; nudge it.
    Y.diagonal().array() += 1e-10 * std::max(1.0, Y.norm());
    ldlt.compute(Y);
    if (ldlt.info() != Eigen::Success)
      throw NoStabilizingSolution("solve_care: Bass initialization failed");
  }
  return ldlt.solve(B1).transpose();
}

}  // namespace

Eigen::MatrixXd solve_care(const Eigen::Ref<const Eigen::MatrixXd>& A,
                           const Eigen::Ref<const Eigen::MatrixXd>& B1,
                           const Eigen::Ref<const Eigen::MatrixXd>& Q,
                           const Eigen::Ref<const Eigen::MatrixXd>& R) {
  check_square_finite(A, "solve_care");
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B1.cols();
  if (B1.rows() != n) throw DimensionMismatch("solve_care: B1 row count");
  if (Q.rows() != n || Q.cols() != n) throw DimensionMismatch("solve_care: Q shape");
  if (R.rows() != m || R.cols() != m) throw DimensionMismatch("solve_care: R shape");
  Eigen::LLT<Eigen::MatrixXd> r_llt(symmetrized(R));
  if (r_llt.info() != Eigen::Success)
    throw InvalidWeights("solve_care: R is not positive definite");

  Eigen::MatrixXd K;
  if (spectral_abscissa(A).is_hurwitz)
    K = Eigen::MatrixXd::Zero(m, n);
  else
    K = bass_gain(A, B1);

  constexpr int kMaxKleinman = 100;
  constexpr double kRelTol = 1e-12;
  Eigen::MatrixXd Qs = symmetrized(Q);
  Eigen::MatrixXd P;
  Eigen::MatrixXd P_prev;
  for (int it = 0; it < kMaxKleinman; ++it) {
    SchurPoint cl(A - B1 * K);
    if (!cl.is_hurwitz())
      throw NoStabilizingSolution("solve_care: iterate lost stability at step " +
                                  std::to_string(it));
    P = cl.solve_primal(Qs + K.transpose() * R * K);
    K = r_llt.solve(B1.transpose() * P);
    if (it > 0 && (P - P_prev).norm() <= kRelTol * std::max(1.0, P.norm())) return P;
    P_prev = P;
  }
  throw NoStabilizingSolution("solve_care: Kleinman iteration cap reached");
}

Eigen::MatrixXd care_gain(const Eigen::Ref<const Eigen::MatrixXd>& A,
                          const Eigen::Ref<const Eigen::MatrixXd>& B1,
                          const Eigen::Ref<const Eigen::MatrixXd>& Q,
                          const Eigen::Ref<const Eigen::MatrixXd>& R) {
  Eigen::MatrixXd P = solve_care(A, B1, Q, R);
  return Eigen::LLT<Eigen::MatrixXd>(0.5 * (R + R.transpose())).solve(B1.transpose() * P);
}

}  // namespace slqr
