#pragma once

#include <cstdint>
#include <vector>

#include "slqr/plant.hpp"
#include "slqr/solvers.hpp"

namespace slqr {

// Chain of N coupled three-state agents, each with two actuators and
// disturbance input on every state. Agent i couples to agent j through
// +-(i-j)/2 identity blocks, so the coupling grows with chain distance and
// the open loop goes unstable as N grows.
Plant gen_multiagent(int N);

enum class PerturbTargets { ANonzeros, AB1B2Nonzeros };

struct DatasetSpec {
  Plant base;
  int count = 1;
  double noise_sigma = 1.0;
  std::uint64_t seed = 0;
  PerturbTargets targets = PerturbTargets::ANonzeros;
};

struct LabeledExample {
  Plant plant;
  Gain k_star;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  // Total perturbation draws discarded because the plant lost stabilizability
  // or the reference solve failed to converge.
  long rejections = 0;
};

// Perturbs the structural nonzeros of the base plant with N(0, sigma^2) noise
// and labels each draw with a converged reference solve started from the LQR
// gain. Invalid draws are redrawn from a fresh per-attempt stream; more than
// ten attempts for any example raises TooManyRejections. Examples are
// generated independently per index, so any jobs count yields identical bytes.
Dataset gen_dataset(const DatasetSpec& spec, const IstaConfig& reference_config, int jobs = 1);

}  // namespace slqr
