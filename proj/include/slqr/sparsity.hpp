#pragma once

#include <Eigen/Dense>

#include "slqr/errors.hpp"
#include "slqr/partition.hpp"

namespace slqr {

enum class RegKind { L1, WeightedL1, BlockL1, WeightedBlockL1 };

// Sparsity penalty G(K). Weighted kinds carry their reweighting state: an
// elementwise weight matrix for WeightedL1, a block-grid matrix for
// WeightedBlockL1, refreshed from the current iterate via update_weights.
struct Regularizer {
  RegKind kind = RegKind::L1;
  double epsilon = 1e-4;
  Eigen::MatrixXd weights;

  bool is_weighted() const {
    return kind == RegKind::WeightedL1 || kind == RegKind::WeightedBlockL1;
  }
  bool is_block() const {
    return kind == RegKind::BlockL1 || kind == RegKind::WeightedBlockL1;
  }
};

enum class BallKind { L0, L1, BlockL1 };

struct Ball {
  BallKind kind = BallKind::L0;
  double radius = 0.0;  // element count for L0
};

long nnz(const Eigen::Ref<const Eigen::MatrixXd>& K);

double g_value(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
               const BlockPartition& partition);

// Penalty recorded in solver traces. Equals g_value for the plain kinds. For
// weighted kinds it is the concave penalty sum log(1 + |K_lk|/eps) (block
// norms for the block kind) whose linearization at the current iterate has
// exactly the reweighting weights as slopes; that is the quantity a
// reweighted proximal step is guaranteed not to increase, whereas g_value
// evaluated with refreshed weights can fluctuate.
double monotone_g(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
                  const BlockPartition& partition);

Eigen::MatrixXd shrink(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double a);

Eigen::MatrixXd shrink_block(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double a,
                             const BlockPartition& partition);

Eigen::MatrixXd shrink_weighted(const Eigen::Ref<const Eigen::MatrixXd>& K_in,
                                double gamma_over_rho,
                                const Eigen::Ref<const Eigen::MatrixXd>& weights);

Eigen::MatrixXd shrink_block_weighted(const Eigen::Ref<const Eigen::MatrixXd>& K_in,
                                      double gamma_over_rho,
                                      const Eigen::Ref<const Eigen::MatrixXd>& weights,
                                      const BlockPartition& partition);

Regularizer update_weights(const Eigen::Ref<const Eigen::MatrixXd>& K, const Regularizer& reg,
                           const BlockPartition& partition);

// Proximal step of gamma*G at penalty scale rho: the shrink variant matching
// reg applied to K_in with base threshold gamma/rho.
Eigen::MatrixXd apply_prox(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double gamma,
                           double rho, const Regularizer& reg, const BlockPartition& partition);

Eigen::MatrixXd project_l0(const Eigen::Ref<const Eigen::MatrixXd>& K_in, long s);

Eigen::MatrixXd project_l1(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double s);

Eigen::MatrixXd project_block(const Eigen::Ref<const Eigen::MatrixXd>& K_in, double s,
                              const BlockPartition& partition);

// Sparsity measure of K under the ball's notion (element count, l1 norm, or
// sum of block Frobenius norms), and the dispatching projection.
double ball_measure(const Eigen::Ref<const Eigen::MatrixXd>& K, const Ball& ball,
                    const BlockPartition& partition);

Eigen::MatrixXd project_ball(const Eigen::Ref<const Eigen::MatrixXd>& K_in, const Ball& ball,
                             const BlockPartition& partition);

}  // namespace slqr
