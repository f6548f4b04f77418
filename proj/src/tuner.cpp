#include "slqr/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <utility>

#include "slqr/errors.hpp"
#include "slqr/linalg.hpp"
#include "slqr/rng.hpp"
#include "slqr/sparsity.hpp"

namespace slqr {

void UnrolledNet::validate() const {
  if (layers.empty()) throw InputError("UnrolledNet: needs at least one layer");
  for (std::size_t t = 0; t < layers.size(); ++t) {
    if (!(layers[t].w1 > 0.0))
      throw InputError("UnrolledNet: layer " + std::to_string(t) + " has w1 <= 0");
    if (!(layers[t].w2 >= 0.0))
      throw InputError("UnrolledNet: layer " + std::to_string(t) + " has w2 < 0");
  }
}

UnrolledNet UnrolledNet::untuned(int depth, SparsityOp op, BlockPartition partition) {
  if (depth < 1) throw InputError("UnrolledNet: depth must be >= 1");
  UnrolledNet net;
  net.layers.assign(static_cast<std::size_t>(depth), LayerParams{});
  net.op = op;
  net.partition = std::move(partition);
  return net;
}

Gain net_forward(const UnrolledNet& net, const Plant& plant,
                 const Eigen::Ref<const Eigen::MatrixXd>& K0, ForwardTrace* trace,
                 EvalCounters* counters) {
  net.validate();
  EvalPoint cur(plant, K0, counters);
  if (!cur.is_stabilizing())
    throw InitNotStabilizing("net_forward: K0 spectral abscissa = " +
                             std::to_string(cur.abscissa()));
  if (trace) trace->fallback.assign(net.layers.size(), false);

  for (std::size_t t = 0; t < net.layers.size(); ++t) {
    const LayerParams& lp = net.layers[t];
    Eigen::MatrixXd shrunk = cur.K() - lp.w1 * cur.grad();
    shrunk = net.op == SparsityOp::Elementwise ? shrink(shrunk, lp.w2)
                                               : shrink_block(shrunk, lp.w2, net.partition);
    Eigen::MatrixXd cand;
    if (lp.w3 == 1.0) {
      // Exact mixing weight skips the blend arithmetic so the untuned net
      // replays fixed-step proximal iterations bit for bit.
      cand = std::move(shrunk);
    } else {
      cand = lp.w3 * shrunk + (1.0 - lp.w3) * cur.K();
    }
    EvalPoint next(plant, std::move(cand), counters);
    if (next.is_stabilizing()) {
      cur = std::move(next);
    } else if (trace) {
      trace->fallback[t] = true;
    }
  }
  return Gain{cur.K(), cur.abscissa(), std::nullopt};
}

std::vector<PreparedExample> prepare_examples(const std::vector<LabeledExample>& examples) {
  std::vector<PreparedExample> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const LabeledExample& ex = examples[i];
    EvalPoint ref(ex.plant, ex.k_star.K);
    if (!ref.is_stabilizing())
      throw InputError("prepare_examples: reference gain " + std::to_string(i) +
                       " is not stabilizing");
    out.push_back(PreparedExample{
        ex.plant, care_gain(ex.plant.A, ex.plant.B1, ex.plant.Q, ex.plant.R), ex.k_star.K});
  }
  return out;
}

double net_loss(const UnrolledNet& net, const std::vector<PreparedExample>& examples,
                const std::vector<int>* subset, EvalCounters* counters) {
  double total = 0.0;
  auto add_one = [&](int i) {
    const PreparedExample& ex = examples[static_cast<std::size_t>(i)];
    Gain out = net_forward(net, ex.plant, ex.K0, nullptr, counters);
    total += (ex.K_star - out.K).squaredNorm();
  };
  if (subset) {
    for (int i : *subset) add_one(i);
  } else {
    for (int i = 0; i < static_cast<int>(examples.size()); ++i) add_one(i);
  }
  return total;
}

namespace {

// Training works on a normalized parameter vector: each coordinate is the raw
// parameter divided by a per-coordinate scale taken from the initial net.
// That puts the step sizes (order 1e-2) and the mixing weights (order 1) on
// the same footing for a single SPSA step length.
struct ParamSpace {
  std::vector<double> scale;

  explicit ParamSpace(const UnrolledNet& net) {
    scale.reserve(net.layers.size() * 3);
    for (const LayerParams& lp : net.layers) {
      scale.push_back(std::max(std::abs(lp.w1), 1e-3));
      scale.push_back(std::max(std::abs(lp.w2), 1e-3));
      scale.push_back(std::max(std::abs(lp.w3), 1e-3));
    }
  }

  std::vector<double> pack(const UnrolledNet& net) const {
    std::vector<double> theta(scale.size());
    for (std::size_t t = 0; t < net.layers.size(); ++t) {
      theta[3 * t + 0] = net.layers[t].w1 / scale[3 * t + 0];
      theta[3 * t + 1] = net.layers[t].w2 / scale[3 * t + 1];
      theta[3 * t + 2] = net.layers[t].w3 / scale[3 * t + 2];
    }
    return theta;
  }

  UnrolledNet unpack(const std::vector<double>& theta, const UnrolledNet& shape) const {
    UnrolledNet net = shape;
    for (std::size_t t = 0; t < net.layers.size(); ++t) {
      net.layers[t].w1 = std::max(theta[3 * t + 0] * scale[3 * t + 0], 1e-8);
      net.layers[t].w2 = std::max(theta[3 * t + 1] * scale[3 * t + 1], 0.0);
      net.layers[t].w3 = theta[3 * t + 2] * scale[3 * t + 2];
    }
    return net;
  }
};

std::vector<int> pick_minibatch(int n, int want, std::mt19937_64& engine) {
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  if (want >= n) return idx;
  // Partial Fisher-Yates, then index order so the summation order is fixed.
  for (int i = 0; i < want; ++i) {
    int j = i + static_cast<int>(engine() % static_cast<std::uint64_t>(n - i));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(want));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

TrainResult train(const UnrolledNet& net, const std::vector<PreparedExample>& train_set,
                  const TrainOpts& opts) {
  net.validate();
  if (train_set.empty()) throw InputError("train: empty training set");
  if (opts.epochs < 0) throw InputError("train: epochs must be >= 0");
  if (!(opts.step > 0.0) || !(opts.spsa_perturb > 0.0))
    throw InputError("train: step and spsa_perturb must be > 0");
  if (opts.minibatch < 1) throw InputError("train: minibatch must be >= 1");
  if (opts.exact_gradient && net.depth() > 10)
    throw InputError("train: exact gradient mode is limited to depth <= 10");

  const ParamSpace space(net);
  std::vector<double> theta = space.pack(net);
  const std::size_t d = theta.size();

  TrainResult result;
  result.net = net;
  result.initial_loss = net_loss(net, train_set);
  result.final_loss = result.initial_loss;

  std::mt19937_64 engine(substream_seed(opts.seed, 0x74756e65ULL, 0));
  const double c = opts.spsa_perturb;
  double step = opts.step;
  int rejects_in_a_row = 0;

  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<double> ghat(d, 0.0);
    if (opts.exact_gradient) {
      for (std::size_t k = 0; k < d; ++k) {
        std::vector<double> plus = theta, minus = theta;
        plus[k] += c;
        minus[k] -= c;
        ghat[k] = (net_loss(space.unpack(plus, net), train_set) -
                   net_loss(space.unpack(minus, net), train_set)) /
                  (2.0 * c);
      }
    } else {
      std::vector<int> batch =
          pick_minibatch(static_cast<int>(train_set.size()), opts.minibatch, engine);
      std::vector<double> delta(d), plus = theta, minus = theta;
      for (std::size_t k = 0; k < d; ++k) {
        delta[k] = (engine() & 1u) ? 1.0 : -1.0;
        plus[k] += c * delta[k];
        minus[k] -= c * delta[k];
      }
      const double lp = net_loss(space.unpack(plus, net), train_set, &batch);
      const double lm = net_loss(space.unpack(minus, net), train_set, &batch);
      const double diff = (lp - lm) / (2.0 * c);
      for (std::size_t k = 0; k < d; ++k) ghat[k] = diff * delta[k];
    }

    std::vector<double> cand = theta;
    for (std::size_t k = 0; k < d; ++k) cand[k] -= step * ghat[k];
    UnrolledNet cand_net = space.unpack(cand, net);
    const double cand_loss = net_loss(cand_net, train_set);

    // Guarded update: only strict full-batch improvements move the iterate,
    // so the training loss is non-increasing by construction.
    if (std::isfinite(cand_loss) && cand_loss < result.final_loss) {
      theta = std::move(cand);
      result.net = std::move(cand_net);
      result.final_loss = cand_loss;
      ++result.accepted_updates;
      rejects_in_a_row = 0;
    } else if (++rejects_in_a_row >= 25 && step > opts.step * 0x1p-20) {
      // A long rejection streak means the step overshoots this region.
      step *= 0.5;
      rejects_in_a_row = 0;
    }
  }

  result.improved = result.accepted_updates > 0;
  if (!result.improved) result.net = net;
  return result;
}

double nmse(const std::vector<Eigen::MatrixXd>& estimates,
            const std::vector<Eigen::MatrixXd>& references) {
  if (estimates.size() != references.size())
    throw InputError("nmse: estimate and reference counts differ");
  if (references.empty()) throw InputError("nmse: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < references.size(); ++i) {
    const double denom = references[i].squaredNorm();
    if (denom == 0.0)
      throw ZeroReference("nmse: reference " + std::to_string(i) + " is the zero matrix");
    total += (estimates[i] - references[i]).squaredNorm() / denom;
  }
  return total / static_cast<double>(references.size());
}

}  // namespace slqr
