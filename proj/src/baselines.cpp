#include "slqr/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

namespace slqr {

namespace {

constexpr double kInnerRho0 = 100.0;
constexpr double kInnerAlpha = 1.5;
constexpr int kInnerMaxBacktracks = 60;

}  // namespace

SolveResult admm_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const AdmmConfig& config) {
  if (!(config.rho > 0.0)) throw InputError("admm config: rho must be > 0");
  if (!(config.eps_abs > 0.0) || !(config.eps_rel > 0.0))
    throw InputError("admm config: tolerances must be > 0");
  if (!(config.gamma >= 0.0)) throw InputError("admm config: gamma must be >= 0");
  if (config.regularizer.is_weighted())
    throw WrongKind("admm config: regularizer must be L1 or BlockL1");
  plant.validate();

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.algorithm = "admm";
  EvalCounters* counters = &trace.counters;
  const BlockPartition& part = plant.partition;
  const double rho = config.rho;
  const double gamma = config.gamma;

  EvalPoint cur(plant, K0, counters);
  if (!cur.is_stabilizing())
    throw InitNotStabilizing("admm_solve: K0 spectral abscissa = " +
                             std::to_string(cur.abscissa()));

  Eigen::MatrixXd F = cur.K();
  Eigen::MatrixXd Lambda = Eigen::MatrixXd::Zero(F.rows(), F.cols());

  auto push_entry = [&](int iter, long inner_used) {
    TraceEntry e;
    e.iter = iter;
    e.J = cur.J();
    e.G = g_value(F, config.regularizer, part);
    e.F = e.J + gamma * e.G;
    e.rho_or_step = rho;
    e.nnz = nnz(F);
    e.abscissa = cur.abscissa();
    e.backtracks = static_cast<int>(inner_used);
    trace.entries.push_back(e);
  };
  push_entry(0, 0);

  std::vector<double> primal_history;
  trace.status = SolveStatus::MaxIterReached;
  const double scale = std::sqrt(static_cast<double>(F.size()));

  for (int t = 1; t <= config.max_iter; ++t) {
    // K-step: descend the smooth part of L_rho at fixed F, Lambda, keeping
    // every accepted iterate stabilizing.
    long inner_used = 0;
    for (int i = 0; i < config.inner_steps; ++i) {
      Eigen::MatrixXd g = cur.grad() + Lambda + rho * (cur.K() - F);
      double base_smooth = cur.J() + (Lambda.array() * cur.K().array()).sum() +
                           0.5 * rho * (cur.K() - F).squaredNorm();
      double rho_in = kInnerRho0;
      std::optional<EvalPoint> accepted;
      for (int bt = 0; bt <= kInnerMaxBacktracks; ++bt) {
        Eigen::MatrixXd Kc = cur.K() - g / rho_in;
        if (!Kc.allFinite()) throw InnerSolveFailed("admm_solve: non-finite K-step candidate");
        EvalPoint cand(plant, std::move(Kc), counters);
        if (cand.is_stabilizing()) {
          Eigen::MatrixXd dK = cand.K() - cur.K();
          double cand_smooth = cand.J() + (Lambda.array() * cand.K().array()).sum() +
                               0.5 * rho * (cand.K() - F).squaredNorm();
          double surrogate =
              base_smooth + (dK.array() * g.array()).sum() + 0.5 * rho_in * dK.squaredNorm();
          if (cand_smooth <= surrogate) {
            accepted.emplace(std::move(cand));
            break;
          }
        }
        rho_in *= kInnerAlpha;
      }
      if (!accepted) break;  // no productive step at any tried scale
      double moved = (accepted->K() - cur.K()).norm();
      cur = std::move(*accepted);
      ++inner_used;
      if (moved < config.inner_tol) break;
    }

    // F-step has the closed-form prox; then the scaled dual ascent.
    Eigen::MatrixXd F_new = apply_prox(cur.K() + Lambda / rho, gamma, rho,
                                       config.regularizer, part);
    double dual_residual = rho * (F_new - F).norm();
    double primal_residual = (cur.K() - F_new).norm();
    Lambda += rho * (cur.K() - F_new);
    F = F_new;
    primal_history.push_back(primal_residual);
    push_entry(t, inner_used);

    double eps_primal =
        scale * config.eps_abs + config.eps_rel * std::max(cur.K().norm(), F.norm());
    double eps_dual = scale * config.eps_abs + config.eps_rel * Lambda.norm();
    if (primal_residual <= eps_primal && dual_residual <= eps_dual) {
      trace.status = SolveStatus::Converged;
      break;
    }
  }

  // Soft sanity signal only: ADMM residuals are not guaranteed monotone.
  if (primal_history.size() >= 10) {
    for (std::size_t i = primal_history.size() - 9; i < primal_history.size(); ++i) {
      if (primal_history[i] > primal_history[i - 1]) {
        trace.warnings.push_back("primal residual increased within the last 10 iterations");
        break;
      }
    }
  }

  // Report the sparse copy when it is itself stabilizing (at convergence the
  // two have met); otherwise fall back to the dense stabilizing K.
  EvalPoint f_point(plant, F, counters);
  if (f_point.is_stabilizing())
    result.k_final = Gain{F, f_point.abscissa(), f_point.J()};
  else
    result.k_final = Gain{cur.K(), cur.abscissa(), cur.J()};
  return result;
}

namespace {

// Prunable coordinate units for GraSP: elements (row-major order) or whole
// blocks of the partition, restricted to off-diagonal blocks when the
// diagonal is exempt.
struct PruneUnits {
  std::vector<std::pair<int, int>> element_coords;  // elementwise mode
  std::vector<std::pair<int, int>> block_coords;    // block mode
  bool block_mode = false;
};

PruneUnits prunable_units(const Plant& plant, const GraspConfig& cfg) {
  const BlockPartition& p = plant.partition;
  PruneUnits u;
  u.block_mode = cfg.block_mode;
  if (cfg.block_mode) {
    for (int bi = 0; bi < p.block_rows(); ++bi)
      for (int bj = 0; bj < p.block_cols(); ++bj)
        if (!(cfg.exempt_diagonal && bi == bj)) u.block_coords.emplace_back(bi, bj);
  } else {
    for (int bi = 0; bi < p.block_rows(); ++bi)
      for (int bj = 0; bj < p.block_cols(); ++bj) {
        if (cfg.exempt_diagonal && bi == bj) continue;
        int r0 = p.row_offset(bi), c0 = p.col_offset(bj);
        for (int r = 0; r < p.row_sizes[bi]; ++r)
          for (int c = 0; c < p.col_sizes[bj]; ++c) u.element_coords.emplace_back(r0 + r, c0 + c);
      }
    // Row-major over the whole matrix so tie-breaking is by flat index.
    std::sort(u.element_coords.begin(), u.element_coords.end(),
              [&](const auto& a, const auto& b) {
                long fa = static_cast<long>(a.first) * plant.n() + a.second;
                long fb = static_cast<long>(b.first) * plant.n() + b.second;
                return fa < fb;
              });
  }
  return u;
}

long unit_count(const PruneUnits& u) {
  return static_cast<long>(u.block_mode ? u.block_coords.size() : u.element_coords.size());
}

// Scores per prunable unit: |entry| or block Frobenius norm of M.
std::vector<double> unit_scores(const Eigen::MatrixXd& M, const PruneUnits& u,
                                const BlockPartition& p) {
  std::vector<double> s;
  if (u.block_mode) {
    s.reserve(u.block_coords.size());
    for (const auto& [bi, bj] : u.block_coords) s.push_back(p.block(M, bi, bj).norm());
  } else {
    s.reserve(u.element_coords.size());
    for (const auto& [r, c] : u.element_coords) s.push_back(std::abs(M(r, c)));
  }
  return s;
}

// Indices of the s highest-scoring units, stable under ties.
std::vector<long> top_units(const std::vector<double>& scores, long s) {
  std::vector<long> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0L);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](long a, long b) { return scores[a] > scores[b]; });
  idx.resize(static_cast<std::size_t>(std::min<long>(s, static_cast<long>(idx.size()))));
  return idx;
}

void zero_unit(Eigen::MatrixXd& M, const PruneUnits& u, const BlockPartition& p, long k) {
  if (u.block_mode) {
    const auto& [bi, bj] = u.block_coords[static_cast<std::size_t>(k)];
    p.block(M, bi, bj).setZero();
  } else {
    const auto& [r, c] = u.element_coords[static_cast<std::size_t>(k)];
    M(r, c) = 0.0;
  }
}

bool unit_nonzero(const Eigen::MatrixXd& M, const PruneUnits& u, const BlockPartition& p,
                  long k) {
  if (u.block_mode) {
    const auto& [bi, bj] = u.block_coords[static_cast<std::size_t>(k)];
    return p.block(M, bi, bj).norm() != 0.0;
  }
  const auto& [r, c] = u.element_coords[static_cast<std::size_t>(k)];
  return M(r, c) != 0.0;
}

// Keep the s best-scoring units of K, zero the remaining prunable units.
Eigen::MatrixXd prune_to_budget(const Eigen::MatrixXd& K, const PruneUnits& u,
                                const BlockPartition& p, long s) {
  std::vector<double> scores = unit_scores(K, u, p);
  std::vector<char> keep(scores.size(), 0);
  for (long k : top_units(scores, s)) keep[static_cast<std::size_t>(k)] = 1;
  Eigen::MatrixXd out = K;
  for (long k = 0; k < unit_count(u); ++k)
    if (!keep[static_cast<std::size_t>(k)]) zero_unit(out, u, p, k);
  return out;
}

long used_budget(const Eigen::MatrixXd& K, const PruneUnits& u, const BlockPartition& p) {
  long used = 0;
  for (long k = 0; k < unit_count(u); ++k)
    if (unit_nonzero(K, u, p, k)) ++used;
  return used;
}

}  // namespace

SolveResult grasp_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const GraspConfig& config) {
  if (config.s < 0) throw InputError("grasp config: s must be >= 0");
  if (!(config.tol > 0.0)) throw InputError("grasp config: tol must be > 0");
  if (config.max_iter < 1) throw InputError("grasp config: max_iter must be >= 1");
  plant.validate();

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.algorithm = "grasp";
  EvalCounters* counters = &trace.counters;
  const BlockPartition& part = plant.partition;
  PruneUnits units = prunable_units(plant, config);
  const long budget = std::min<long>(config.s, unit_count(units));

  {
    EvalPoint start(plant, K0, counters);
    if (!start.is_stabilizing())
      throw InitNotStabilizing("grasp_solve: K0 spectral abscissa = " +
                               std::to_string(start.abscissa()));
  }

  // Support-preserving blend toward an anchor known to stabilize, used when a
  // prune step lands outside the feasible set. Returns nothing if 40 halvings
  // of theta never stabilize.
  auto repair = [&](const Eigen::MatrixXd& pruned,
                    const Eigen::MatrixXd& anchor) -> std::optional<EvalPoint> {
    EvalPoint cand(plant, pruned, counters);
    if (cand.is_stabilizing()) return cand;
    // Restrict the anchor to the pruned support.
    Eigen::MatrixXd anchor_r = anchor;
    for (long k = 0; k < unit_count(units); ++k)
      if (!unit_nonzero(pruned, units, part, k)) zero_unit(anchor_r, units, part, k);
    double theta = 1.0;
    for (int b = 0; b < 40; ++b) {
      theta *= 0.5;
      EvalPoint mix(plant, theta * pruned + (1.0 - theta) * anchor_r, counters);
      if (mix.is_stabilizing()) return mix;
    }
    return std::nullopt;
  };

  // Initial iterate: prune K0 to budget. If that destabilizes, blend toward
  // the exempt-only part of K0 (the only budget-feasible anchor available
  // before the first iteration).
  std::optional<EvalPoint> cur;
  {
    Eigen::MatrixXd pruned = prune_to_budget(K0, units, part, budget);
    Eigen::MatrixXd exempt_only = K0;
    for (long k = 0; k < unit_count(units); ++k) zero_unit(exempt_only, units, part, k);
    cur = repair(pruned, exempt_only);
    if (!cur)
      throw BacktrackExhausted(
          "grasp_solve: could not stabilize the initial pruned gain within 40 blend steps");
  }

  auto push_entry = [&](int iter, double step, int backtracks, bool exhausted) {
    TraceEntry e;
    e.iter = iter;
    e.J = cur->J();
    e.G = static_cast<double>(used_budget(cur->K(), units, part));
    e.F = e.J;
    e.rho_or_step = step;
    e.nnz = nnz(cur->K());
    e.abscissa = cur->abscissa();
    e.backtracks = backtracks;
    e.exhausted = exhausted;
    trace.entries.push_back(e);
  };
  push_entry(0, 0.0, 0, false);

  int consecutive_stalls = 0;
  trace.status = SolveStatus::MaxIterReached;
  for (int t = 1; t <= config.max_iter; ++t) {
    // Merged support: current support, the budget's worth of largest gradient
    // units, and the exempt units. At most 2*budget prunable units total.
    std::vector<double> grad_scores = unit_scores(cur->grad(), units, part);
    std::vector<char> in_support(grad_scores.size(), 0);
    for (long k : top_units(grad_scores, budget)) in_support[static_cast<std::size_t>(k)] = 1;
    for (long k = 0; k < unit_count(units); ++k)
      if (unit_nonzero(cur->K(), units, part, k)) in_support[static_cast<std::size_t>(k)] = 1;

    auto restrict = [&](const Eigen::MatrixXd& M) {
      Eigen::MatrixXd out = M;
      for (long k = 0; k < unit_count(units); ++k)
        if (!in_support[static_cast<std::size_t>(k)]) zero_unit(out, units, part, k);
      return out;
    };

    // Gradient descent over the merged support.
    EvalPoint b = *cur;
    int total_backtracks = 0;
    double last_step = 0.0;
    for (int i = 0; i < config.inner_steps; ++i) {
      Eigen::MatrixXd g = restrict(b.grad());
      double rho_in = kInnerRho0;
      std::optional<EvalPoint> accepted;
      for (int bt = 0; bt <= kInnerMaxBacktracks; ++bt) {
        EvalPoint cand(plant, b.K() - g / rho_in, counters);
        if (cand.is_stabilizing()) {
          Eigen::MatrixXd dK = cand.K() - b.K();
          double surrogate =
              b.J() + (dK.array() * g.array()).sum() + 0.5 * rho_in * dK.squaredNorm();
          if (cand.J() <= surrogate) {
            accepted.emplace(std::move(cand));
            break;
          }
        }
        rho_in *= kInnerAlpha;
        ++total_backtracks;
      }
      if (!accepted) break;
      double moved = (accepted->K() - b.K()).norm();
      last_step = 1.0 / rho_in;
      b = std::move(*accepted);
      if (moved < config.tol) break;
    }

    // Prune back to budget, repairing toward the previous iterate if needed.
    Eigen::MatrixXd pruned = prune_to_budget(b.K(), units, part, budget);
    std::optional<EvalPoint> next = repair(pruned, cur->K());
    if (!next) {
      push_entry(t, last_step, total_backtracks, true);
      if (++consecutive_stalls >= 2) {
        trace.status = SolveStatus::Stalled;
        break;
      }
      continue;
    }
    consecutive_stalls = 0;

    double dist = (next->K() - cur->K()).norm();
    cur = std::move(*next);
    push_entry(t, last_step, total_backtracks, false);
    if (dist < config.tol) {
      trace.status = SolveStatus::Converged;
      break;
    }
  }

  result.k_final = Gain{cur->K(), cur->abscissa(), cur->J()};
  return result;
}

}  // namespace slqr
