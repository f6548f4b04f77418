#include "slqr/solvers.hpp"

#include <cmath>
#include <optional>
#include <utility>

namespace slqr {

namespace {

void check_ista_config(const IstaConfig& c) {
  if (!(c.gamma >= 0.0)) throw InputError("ista config: gamma must be >= 0");
  if (!(c.rho0 > 0.0)) throw InputError("ista config: rho0 must be > 0");
  if (!(c.alpha > 1.0)) throw InputError("ista config: alpha must be > 1");
  if (!(c.tol > 0.0)) throw InputError("ista config: tol must be > 0");
  if (c.max_iter < 1) throw InputError("ista config: max_iter must be >= 1");
  if (c.max_backtracks < 0) throw InputError("ista config: max_backtracks must be >= 0");
}

void check_ispa_config(const IspaConfig& c) {
  if (!(c.rho0 > 0.0)) throw InputError("ispa config: rho0 must be > 0");
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw InputError("ispa config: alpha must be in (0,1)");
  if (!(c.armijo_c > 0.0 && c.armijo_c < 1.0))
    throw InputError("ispa config: armijo_c must be in (0,1)");
  if (!(c.tol > 0.0)) throw InputError("ispa config: tol must be > 0");
  if (c.max_iter < 1) throw InputError("ispa config: max_iter must be >= 1");
  if (!(c.radius.radius > 0.0)) throw BadRadius("ispa config: ball radius must be > 0");
}

TraceEntry make_entry(int iter, const EvalPoint& point, double G, double gamma, double rho,
                      int backtracks, bool exhausted) {
  TraceEntry e;
  e.iter = iter;
  e.J = point.J();
  e.G = G;
  e.F = e.J + gamma * G;
  e.rho_or_step = rho;
  e.nnz = nnz(point.K());
  e.abscissa = point.abscissa();
  e.backtracks = backtracks;
  e.exhausted = exhausted;
  return e;
}

// Shared ISTA/FISTA loop. FISTA extrapolates the proximal-step base point;
// with momentum off the two are identical by construction.
SolveResult proximal_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                           const IstaConfig& config, bool with_momentum,
                           const char* algorithm) {
  check_ista_config(config);
  plant.validate();

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.algorithm = algorithm;

  EvalPoint cur(plant, K0, &trace.counters);
  if (!cur.is_stabilizing())
    throw InitNotStabilizing(std::string(algorithm) +
                             ": K0 spectral abscissa = " + std::to_string(cur.abscissa()));

  Regularizer reg = config.regularizer;
  const BlockPartition& part = plant.partition;
  const double gamma = config.gamma;

  // Trace columns record G as monotone_g: identical to g_value for the plain
  // kinds, the log-form penalty for reweighted kinds (see sparsity.hpp).
  trace.entries.push_back(make_entry(0, cur, monotone_g(cur.K(), reg, part), gamma,
                                     config.rho0, 0, false));

  Eigen::MatrixXd K_prev_iter = cur.K();  // K^(t-1), for momentum
  double alpha_t = 1.0;                   // FISTA alpha_1
  int consecutive_exhausted = 0;
  trace.status = SolveStatus::MaxIterReached;

  for (int t = 1; t <= config.max_iter; ++t) {
    if (reg.is_weighted()) reg = update_weights(cur.K(), reg, part);

    // Base point of the proximal step: the iterate, or its extrapolation.
    std::optional<EvalPoint> extrapolated;
    double alpha_next = alpha_t;
    if (with_momentum) {
      alpha_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * alpha_t * alpha_t));
      double beta = config.momentum_scale * (alpha_t - 1.0) / alpha_next;
      if (beta != 0.0) {
        Eigen::MatrixXd Y = cur.K() + beta * (cur.K() - K_prev_iter);
        extrapolated.emplace(plant, std::move(Y), &trace.counters);
        // Non-stabilizing extrapolation: fall back to the plain step.
        if (!extrapolated->is_stabilizing()) extrapolated.reset();
      }
    }
    const EvalPoint& base = extrapolated ? *extrapolated : cur;

    double rho = config.rho0;
    int backtracks = 0;
    bool exhausted = false;
    std::optional<EvalPoint> accepted;
    while (true) {
      // Step written as a reciprocal multiply so a fixed-step replay of this
      // update (e.g. with a stored 1/rho weight) reproduces it bit for bit.
      const double inv_rho = 1.0 / rho;
      Eigen::MatrixXd Kc = apply_prox(base.K() - inv_rho * base.grad(), gamma, rho, reg, part);
      EvalPoint cand(plant, std::move(Kc), &trace.counters);
      bool ok = cand.is_stabilizing();
      if (ok && config.strict_acceptance) {
        Eigen::MatrixXd dK = cand.K() - base.K();
        double surrogate = base.J() + (dK.array() * base.grad().array()).sum() +
                           0.5 * rho * dK.squaredNorm();
        ok = cand.J() <= surrogate;
      }
      if (ok) {
        accepted.emplace(std::move(cand));
        break;
      }
      if (backtracks == config.max_backtracks) {
        exhausted = true;
        break;
      }
      rho *= config.alpha;
      ++backtracks;
    }

    if (exhausted) {
      // rho -> infinity limit: keep the iterate, note the stall.
      trace.entries.push_back(make_entry(t, cur, monotone_g(cur.K(), reg, part), gamma, rho,
                                         backtracks, true));
      if (++consecutive_exhausted >= 2) {
        trace.status = SolveStatus::Stalled;
        break;
      }
      alpha_t = alpha_next;
      continue;
    }
    consecutive_exhausted = 0;

    double dist = (accepted->K() - cur.K()).norm();
    K_prev_iter = cur.K();
    cur = std::move(*accepted);
    alpha_t = alpha_next;
    trace.entries.push_back(
        make_entry(t, cur, monotone_g(cur.K(), reg, part), gamma, rho, backtracks, false));
    if (dist < config.tol) {
      trace.status = SolveStatus::Converged;
      break;
    }
  }

  result.k_final = Gain{cur.K(), cur.abscissa(), cur.J()};
  return result;
}

}  // namespace

Eigen::MatrixXd ista_step(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K_t,
                          double rho, double gamma, const Regularizer& reg) {
  if (!(rho > 0.0)) throw InputError("ista_step: rho must be > 0");
  EvalPoint at(plant, K_t);
  if (!at.is_stabilizing())
    throw NotStabilizing("ista_step: K_t spectral abscissa = " + std::to_string(at.abscissa()));
  const double inv_rho = 1.0 / rho;
  return apply_prox(at.K() - inv_rho * at.grad(), gamma, rho, reg, plant.partition);
}

SolveResult ista_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const IstaConfig& config) {
  return proximal_solve(plant, K0, config, /*with_momentum=*/false, "ista");
}

SolveResult fista_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const IstaConfig& config) {
  return proximal_solve(plant, K0, config, /*with_momentum=*/true, "fista");
}

namespace {

Gain find_feasible_impl(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const Ball& ball, EvalCounters* counters) {
  EvalPoint start(plant, K0, counters);
  if (!start.is_stabilizing())
    throw InitNotStabilizing("ispa_find_feasible: K0 spectral abscissa = " +
                             std::to_string(start.abscissa()));
  if (ball_measure(K0, ball, plant.partition) <= ball.radius)
    return Gain{start.K(), start.abscissa(), start.J()};

  // Gamma homotopy: sparsify harder until the iterate fits in the ball,
  // warm-starting each solve from the previous one.
  IstaConfig cfg;
  cfg.regularizer.kind =
      ball.kind == BallKind::BlockL1 ? RegKind::BlockL1 : RegKind::L1;
  cfg.gamma = 1.0;
  Eigen::MatrixXd K_warm = K0;
  constexpr int kHomotopyCap = 60;
  for (int d = 0; d < kHomotopyCap; ++d) {
    SolveResult res = ista_solve(plant, K_warm, cfg);
    if (counters) {
      counters->lyapunov_solves += res.trace.counters.lyapunov_solves;
      counters->schur_factorizations += res.trace.counters.schur_factorizations;
    }
    if (ball_measure(res.k_final.K, ball, plant.partition) <= ball.radius) return res.k_final;
    K_warm = res.k_final.K;
    cfg.gamma *= 2.0;
  }
  throw FeasibilityNotFound("ispa_find_feasible: ball radius " +
                            std::to_string(ball.radius) + " not reached after " +
                            std::to_string(kHomotopyCap) + " gamma doublings");
}

}  // namespace

Gain ispa_find_feasible(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                        const Ball& ball) {
  return find_feasible_impl(plant, K0, ball, nullptr);
}

SolveResult ispa_solve(const Plant& plant, const Eigen::Ref<const Eigen::MatrixXd>& K0,
                       const IspaConfig& config) {
  check_ispa_config(config);
  plant.validate();

  SolveResult result;
  SolveTrace& trace = result.trace;
  trace.algorithm = "ispa";
  const Ball& ball = config.radius;
  const BlockPartition& part = plant.partition;

  Gain feasible = find_feasible_impl(plant, K0, ball, &trace.counters);
  EvalPoint cur(plant, feasible.K, &trace.counters);

  auto measure = [&](const Eigen::MatrixXd& K) { return ball_measure(K, ball, part); };
  // F column holds plain J: the constrained problem has no penalty term.
  {
    TraceEntry e;
    e.iter = 0;
    e.J = cur.J();
    e.G = measure(cur.K());
    e.F = e.J;
    e.rho_or_step = config.rho0;
    e.nnz = nnz(cur.K());
    e.abscissa = cur.abscissa();
    trace.entries.push_back(e);
  }

  int consecutive_exhausted = 0;
  trace.status = SolveStatus::MaxIterReached;
  for (int t = 1; t <= config.max_iter; ++t) {
    const Eigen::MatrixXd& g = cur.grad();
    double required = config.armijo_c * g.squaredNorm();

    double rho = config.rho0;
    int backtracks = 0;
    bool exhausted = false;
    std::optional<EvalPoint> accepted;
    while (true) {
      Eigen::MatrixXd Kc = project_ball(cur.K() - rho * g, ball, part);
      EvalPoint cand(plant, std::move(Kc), &trace.counters);
      if (cand.is_stabilizing() && cand.J() <= cur.J() - rho * required) {
        accepted.emplace(std::move(cand));
        break;
      }
      if (backtracks == config.max_backtracks) {
        exhausted = true;
        break;
      }
      rho *= config.alpha;  // alpha < 1: smaller step
      ++backtracks;
    }

    if (exhausted) {
      TraceEntry e;
      e.iter = t;
      e.J = cur.J();
      e.G = measure(cur.K());
      e.F = e.J;
      e.rho_or_step = rho;
      e.nnz = nnz(cur.K());
      e.abscissa = cur.abscissa();
      e.backtracks = backtracks;
      e.exhausted = true;
      trace.entries.push_back(e);
      if (++consecutive_exhausted >= 2) {
        trace.status = SolveStatus::Stalled;
        break;
      }
      continue;
    }
    consecutive_exhausted = 0;

    double dist = (accepted->K() - cur.K()).norm();
    cur = std::move(*accepted);
    TraceEntry e;
    e.iter = t;
    e.J = cur.J();
    e.G = measure(cur.K());
    e.F = e.J;
    e.rho_or_step = rho;
    e.nnz = nnz(cur.K());
    e.abscissa = cur.abscissa();
    e.backtracks = backtracks;
    trace.entries.push_back(e);
    if (dist < config.tol) {
      trace.status = SolveStatus::Converged;
      break;
    }
  }

  result.k_final = Gain{cur.K(), cur.abscissa(), cur.J()};
  return result;
}

}  // namespace slqr
