#pragma once

#include <cstdint>
#include <vector>

#include "slqr/objective.hpp"
#include "slqr/plant.hpp"
#include "slqr/systems.hpp"

namespace slqr {

struct LayerParams {
  double w1 = 0.01;  // gradient step size, > 0
  double w2 = 0.01;  // shrinkage threshold, >= 0
  double w3 = 1.0;   // mixing weight on the shrunk update
};

enum class SparsityOp { Elementwise, Block };

// Fixed-depth unrolling of the proximal gradient update with per-layer
// learnable step, threshold, and mixing weight. Layer t maps K to
// w3 * shrink(K - w1 * grad J(K), w2) + (1 - w3) * K, falling back to K
// itself whenever the blend is not stabilizing.
struct UnrolledNet {
  std::vector<LayerParams> layers;
  SparsityOp op = SparsityOp::Elementwise;
  BlockPartition partition;  // used only by the block shrinkage op

  int depth() const { return static_cast<int>(layers.size()); }
  void validate() const;

  static UnrolledNet untuned(int depth, SparsityOp op = SparsityOp::Elementwise,
                             BlockPartition partition = {});
};

// Which layers hit the stability fallback (output = input).
struct ForwardTrace {
  std::vector<bool> fallback;
};

Gain net_forward(const UnrolledNet& net, const Plant& plant,
                 const Eigen::Ref<const Eigen::MatrixXd>& K0, ForwardTrace* trace = nullptr,
                 EvalCounters* counters = nullptr);

// Dataset example with the common LQR initializer precomputed, so repeated
// loss evaluations during training do not re-solve the Riccati equation.
struct PreparedExample {
  Plant plant;
  Eigen::MatrixXd K0;
  Eigen::MatrixXd K_star;
};

std::vector<PreparedExample> prepare_examples(const std::vector<LabeledExample>& examples);

// Sum over examples of ||K_star - net_forward(net, plant, K0)||_F^2, in index
// order. `subset` restricts to those indices (still summed in index order).
double net_loss(const UnrolledNet& net, const std::vector<PreparedExample>& examples,
                const std::vector<int>* subset = nullptr, EvalCounters* counters = nullptr);

struct TrainOpts {
  int epochs = 1000;
  double step = 0.1;            // update scale in normalized parameter space
  double spsa_perturb = 1e-3;   // probe radius in normalized parameter space
  std::uint64_t seed = 0;
  int minibatch = 8;            // examples per gradient estimate
  bool exact_gradient = false;  // central differences instead of SPSA (depth <= 10)
};

struct TrainResult {
  UnrolledNet net;
  bool improved = false;  // false: no accepted update, net equals the input
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int accepted_updates = 0;
};

TrainResult train(const UnrolledNet& net, const std::vector<PreparedExample>& train_set,
                  const TrainOpts& opts);

double nmse(const std::vector<Eigen::MatrixXd>& estimates,
            const std::vector<Eigen::MatrixXd>& references);

}  // namespace slqr
