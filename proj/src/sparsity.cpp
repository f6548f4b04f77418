#include "slqr/sparsity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace slqr {

namespace {

inline double scalar_shrink(double x, double a) {
  double mag = std::abs(x) - a;
  if (mag <= 0.0) return 0.0;
  return x > 0.0 ? mag : -mag;
}

// Block Frobenius norms as a block_rows x block_cols grid.
Eigen::MatrixXd block_norms(const Eigen::Ref<const Eigen::MatrixXd>& K,
                            const BlockPartition& p) {
  Eigen::MatrixXd N(p.block_rows(), p.block_cols());
  for (int i = 0; i < p.block_rows(); ++i)
    for (int j = 0; j < p.block_cols(); ++j) N(i, j) = p.block(K, i, j).norm();
  return N;
}

void check_weights(const Regularizer& reg, Eigen::Index rows, Eigen::Index cols) {
  if (reg.weights.rows() != rows || reg.weights.cols() != cols)
    throw InvalidWeights("regularizer weights not set or wrong shape");
  if (!(reg.weights.array() > 0.0).all() || !reg.weights.allFinite())
    throw InvalidWeights("regularizer weights must be positive and finite");
}

// Soft-threshold level that puts a descending-sorted magnitude vector onto
// the l1 sphere of radius s: lambda = (sum of the |M| leading values - s)/|M|
// with |M| the largest j keeping u_j - (prefix_j - s)/j positive.
double simplex_lambda(std::vector<double> u, double s) {
  std::sort(u.begin(), u.end(), std::greater<double>());
  double prefix = 0.0;
  double lambda = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    prefix += u[j];
    double cand = (prefix - s) / static_cast<double>(j + 1);
    if (u[j] - cand > 0.0)
      lambda = cand;
    else
      break;
  }
  return lambda;
}

}  // namespace

long nnz(const Eigen::Ref<const Eigen::MatrixXd>& K) {
  return (K.array() != 0.0).count();
}

double g_value(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
               const BlockPartition& partition) {
  switch (reg.kind) {
    case RegKind::L1:
      return K.cwiseAbs().sum();
    case RegKind::WeightedL1:
      check_weights(reg, K.rows(), K.cols());
      return (reg.weights.array() * K.array().abs()).sum();
    case RegKind::BlockL1:
      partition.check_against(K);
      return block_norms(K, partition).sum();
    case RegKind::WeightedBlockL1: {
      partition.check_against(K);
      check_weights(reg, partition.block_rows(), partition.block_cols());
      return (reg.weights.array() * block_norms(K, partition).array()).sum();
    }
  }
  throw WrongKind("g_value: unknown regularizer kind");
}

double monotone_g(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
                  const BlockPartition& partition) {
  switch (reg.kind) {
    case RegKind::L1:
    case RegKind::BlockL1:
      return g_value(K, reg, partition);
    case RegKind::WeightedL1:
      return (K.array().abs() / reg.epsilon).log1p().sum();
    case RegKind::WeightedBlockL1: {
      partition.check_against(K);
      return (block_norms(K, partition).array() / reg.epsilon).log1p().sum();
    }
  }
  throw WrongKind("monotone_g: unknown regularizer kind");
}

Eigen::MatrixXd shrink(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double a) {
  if (a < 0.0) throw InputError("shrink: negative threshold");
  return K_in.unaryExpr([a](double x) { return scalar_shrink(x, a); });
}

Eigen::MatrixXd shrink_block(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double a,
                             const BlockPartition& partition) {
  if (a < 0.0) throw InputError("shrink_block: negative threshold");
  partition.check_against(K_in);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(K_in.rows(), K_in.cols());
  for (int i = 0; i < partition.block_rows(); ++i) {
    for (int j = 0; j < partition.block_cols(); ++j) {
      auto b = partition.block(K_in, i, j);
      if (b.size() == 1) {
        // Same arithmetic as elementwise shrink so a 1x1 partition is an
        // exact degenerate case, not just a close one.
        partition.block(out, i, j)(0, 0) = scalar_shrink(b(0, 0), a);
        continue;
      }
      double norm = b.norm();
      double kept = norm - a;
      if (kept > 0.0) partition.block(out, i, j) = b * (kept / norm);
    }
  }
  return out;
}

Eigen::MatrixXd shrink_weighted(const Eigen::Ref<const Eigen::MatrixXd>& K_in,
                                double gamma_over_rho,
                                const Eigen::Ref<const Eigen::MatrixXd>& weights) {
  if (gamma_over_rho < 0.0) throw InputError("shrink_weighted: negative threshold");
  if (weights.rows() != K_in.rows() || weights.cols() != K_in.cols())
    throw InvalidWeights("shrink_weighted: weight shape mismatch");
  return K_in.binaryExpr(weights, [gamma_over_rho](double x, double w) {
    return scalar_shrink(x, gamma_over_rho * w);
  });
}

Eigen::MatrixXd shrink_block_weighted(const Eigen::Ref<const Eigen::MatrixXd>& K_in,
                                      double gamma_over_rho,
                                      const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                      const BlockPartition& partition) {
  if (gamma_over_rho < 0.0) throw InputError("shrink_block_weighted: negative threshold");
  partition.check_against(K_in);
  if (weights.rows() != partition.block_rows() || weights.cols() != partition.block_cols())
    throw InvalidWeights("shrink_block_weighted: weight grid shape mismatch");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(K_in.rows(), K_in.cols());
  for (int i = 0; i < partition.block_rows(); ++i) {
    for (int j = 0; j < partition.block_cols(); ++j) {
      auto b = partition.block(K_in, i, j);
      double a = gamma_over_rho * weights(i, j);
      if (b.size() == 1) {
        partition.block(out, i, j)(0, 0) = scalar_shrink(b(0, 0), a);
        continue;
      }
      double norm = b.norm();
      double kept = norm - a;
      if (kept > 0.0) partition.block(out, i, j) = b * (kept / norm);
    }
  }
  return out;
}

Regularizer update_weights(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
                           const BlockPartition& partition) {
  if (!(reg.epsilon > 0.0)) throw InvalidWeights("update_weights: epsilon must be positive");
  Regularizer out = reg;
  switch (reg.kind) {
    case RegKind::WeightedL1:
      out.weights = (K.array().abs() + reg.epsilon).inverse();
      return out;
    case RegKind::WeightedBlockL1:
      partition.check_against(K);
      out.weights = (block_norms(K, partition).array() + reg.epsilon).inverse();
      return out;
    default:
      throw WrongKind("update_weights: regularizer is not a weighted kind");
  }
}

Eigen::MatrixXd apply_prox(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double gamma,
                           double rho, const Regularizer& reg,
                           const BlockPartition& partition) {
  double a = gamma / rho;
  switch (reg.kind) {
    case RegKind::L1:
      return shrink(K_in, a);
    case RegKind::WeightedL1:
      return shrink_weighted(K_in, a, reg.weights);
    case RegKind::BlockL1:
      return shrink_block(K_in, a, partition);
    case RegKind::WeightedBlockL1:
      return shrink_block_weighted(K_in, a, reg.weights, partition);
  }
  throw WrongKind("apply_prox: unknown regularizer kind");
}

Eigen::MatrixXd project_l0(const Eigen::Ref<const Eigen::MatrixXd>& K_in, long s) {
  long total = static_cast<long>(K_in.size());
  if (s < 1 || s > total) throw BadRadius("project_l0: s outside [1, m*n]");
  // Rank entries by magnitude; stable sort over row-major order makes the
  // tie rule "lowest flat index wins" explicit.
  std::vector<long> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), 0L);
  auto mag = [&](long f) {
    return std::abs(K_in(f / K_in.cols(), f % K_in.cols()));
  };
  std::stable_sort(idx.begin(), idx.end(),
                   [&](long a, long b) { return mag(a) > mag(b); });
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(K_in.rows(), K_in.cols());
  for (long r = 0; r < s; ++r) {
    long f = idx[static_cast<std::size_t>(r)];
    out(f / K_in.cols(), f % K_in.cols()) = K_in(f / K_in.cols(), f % K_in.cols());
  }
  return out;
}

Eigen::MatrixXd project_l1(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double s) {
  if (!(s > 0.0)) throw BadRadius("project_l1: s must be positive");
  if (K_in.cwiseAbs().sum() <= s) return K_in;
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(K_in.size()));
  for (Eigen::Index j = 0; j < K_in.cols(); ++j)
    for (Eigen::Index i = 0; i < K_in.rows(); ++i) u.push_back(std::abs(K_in(i, j)));
  return shrink(K_in, simplex_lambda(std::move(u), s));
}

Eigen::MatrixXd project_block(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double s,
                              const BlockPartition& partition) {
  if (!(s > 0.0)) throw BadRadius("project_block: s must be positive");
  partition.check_against(K_in);
  Eigen::MatrixXd norms = block_norms(K_in, partition);
  if (norms.sum() <= s) return K_in;
  double lambda = simplex_lambda({norms.data(), norms.data() + norms.size()}, s);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(K_in.rows(), K_in.cols());
  for (int i = 0; i < partition.block_rows(); ++i) {
    for (int j = 0; j < partition.block_cols(); ++j) {
      auto b = partition.block(K_in, i, j);
      if (b.size() == 1) {
        partition.block(out, i, j)(0, 0) = scalar_shrink(b(0, 0), lambda);
        continue;
      }
      double kept = norms(i, j) - lambda;
      if (kept > 0.0) partition.block(out, i, j) = b * (kept / norms(i, j));
    }
  }
  return out;
}

double ball_measure(const Eigen::Ref<const Eigen::MatrixXd>& K, const Ball& ball,
                    const BlockPartition& partition) {
  switch (ball.kind) {
    case BallKind::L0:
      return static_cast<double>(nnz(K));
    case BallKind::L1:
      return K.cwiseAbs().sum();
    case BallKind::BlockL1:
      partition.check_against(K);
      return block_norms(K, partition).sum();
  }
  throw WrongKind("ball_measure: unknown ball kind");
}

Eigen::MatrixXd project_ball(const Eigen::Ref<const Eigen::MatrixXd>& K_in, const Ball& ball,
                             const BlockPartition& partition) {
  switch (ball.kind) {
    case BallKind::L0:
      return project_l0(K_in, static_cast<long>(std::llround(ball.radius)));
    case BallKind::L1:
      return project_l1(K_in, ball.radius);
    case BallKind::BlockL1:
      return project_block(K_in, ball.radius, partition);
  }
  throw WrongKind("project_ball: unknown ball kind");
}

}  // namespace slqr
