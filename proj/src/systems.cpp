#include "slqr/systems.hpp"

#include <future>
#include <string>
#include <utility>

#include "slqr/errors.hpp"
#include "slqr/linalg.hpp"
#include "slqr/objective.hpp"
#include "slqr/rng.hpp"

namespace slqr {

Plant gen_multiagent(int N) {
  if (N < 1) throw InputError("gen_multiagent: N must be >= 1, got " + std::to_string(N));
  const int n = 3 * N;
  const int m = 2 * N;

  Eigen::Matrix3d Aself;
  Aself << -6, 0, -3,  //
      3, -6, 0,        //
      0, 3, -6;
  Eigen::MatrixXd Bself(3, 2);
  Bself << 3, 0,  //
      0, 3,       //
      0, 0;

  Plant p;
  p.A = Eigen::MatrixXd::Zero(n, n);
  p.B1 = Eigen::MatrixXd::Zero(n, m);
  p.B2 = 3.0 * Eigen::MatrixXd::Identity(n, n);
  p.Q = Eigen::MatrixXd::Identity(n, n);
  p.R = Eigen::MatrixXd::Identity(m, m);
  p.partition = BlockPartition::uniform(N, 2, 3);
  p.name = "multiagent-" + std::to_string(N);

  for (int i = 0; i < N; ++i) {
    double drift = 0.0;  // sum of (i - j) over the coupled agents
    for (int j = 0; j < N; ++j) {
      if (j == i) continue;
      drift += static_cast<double>(i - j);
      p.A.block<3, 3>(3 * i, 3 * j) =
          0.5 * static_cast<double>(i - j) * Eigen::Matrix3d::Identity();
    }
    p.A.block<3, 3>(3 * i, 3 * i) = Aself - 0.5 * drift * Eigen::Matrix3d::Identity();
    p.B1.block<3, 2>(3 * i, 2 * i) = Bself;
  }
  return p;
}

namespace {

void perturb_nonzeros(const Eigen::MatrixXd& base, Eigen::MatrixXd& out, double sigma,
                      GaussianStream& g) {
  // Row-major walk so the draw order is part of the dataset contract.
  for (Eigen::Index i = 0; i < base.rows(); ++i)
    for (Eigen::Index j = 0; j < base.cols(); ++j)
      if (base(i, j) != 0.0) out(i, j) = base(i, j) + sigma * g.next();
}

struct DrawOutcome {
  LabeledExample example;
  long failed_draws = 0;
};

DrawOutcome generate_one(const DatasetSpec& spec, const IstaConfig& reference_config,
                         int index) {
  constexpr int kMaxDraws = 10;
  for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
    Plant p = spec.base;
    GaussianStream g(substream_seed(spec.seed, static_cast<std::uint64_t>(index),
                                    static_cast<std::uint64_t>(attempt)));
    perturb_nonzeros(spec.base.A, p.A, spec.noise_sigma, g);
    if (spec.targets == PerturbTargets::AB1B2Nonzeros) {
      perturb_nonzeros(spec.base.B1, p.B1, spec.noise_sigma, g);
      perturb_nonzeros(spec.base.B2, p.B2, spec.noise_sigma, g);
    }
    try {
      Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
      SolveResult res = ista_solve(p, K0, reference_config);
      if (res.trace.status != SolveStatus::Converged) continue;
      return DrawOutcome{LabeledExample{std::move(p), std::move(res.k_final)}, attempt};
    } catch (const NumericalError&) {
      // Perturbation landed outside the stabilizable set; redraw.
      continue;
    }
  }
  throw TooManyRejections("gen_dataset: example " + std::to_string(index) + " rejected " +
                          std::to_string(kMaxDraws) + " consecutive draws");
}

}  // namespace

Dataset gen_dataset(const DatasetSpec& spec, const IstaConfig& reference_config, int jobs) {
  spec.base.validate();
  if (spec.count < 1) throw InputError("gen_dataset: count must be >= 1");
  if (!(spec.noise_sigma >= 0.0)) throw InputError("gen_dataset: noise_sigma must be >= 0");
  if (jobs < 1) throw InputError("gen_dataset: jobs must be >= 1");

  std::vector<DrawOutcome> made(spec.count);
  if (jobs == 1) {
    for (int i = 0; i < spec.count; ++i) made[i] = generate_one(spec, reference_config, i);
  } else {
    // Workers take indices round-robin and write into their own slots, so the
    // assembled dataset is byte-identical to the serial one.
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < spec.count; i += jobs)
          made[i] = generate_one(spec, reference_config, i);
      }));
    }
    for (auto& f : workers) f.get();
  }

  Dataset out;
  out.examples.reserve(made.size());
  for (auto& d : made) {
    out.rejections += d.failed_draws;
    out.examples.push_back(std::move(d.example));
  }
  return out;
}

}  // namespace slqr
