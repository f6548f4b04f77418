#pragma once

// Shared generators and oracles for the test binaries. Everything random is
// seeded explicitly so a failing check reproduces from its seed alone.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "slqr/errors.hpp"
#include "slqr/linalg.hpp"
#include "slqr/objective.hpp"
#include "slqr/plant.hpp"
#include "slqr/rng.hpp"
#include "slqr/sparsity.hpp"

namespace slqr::test {

// Scalar plant with closed forms (a = -1, b = b2 = q = r = 1 by default):
//   P(k) = (q + r k^2) / (2(-a + b k)),  L(k) = b2^2 / (2(-a + b k)),
//   J(k) = b2^2 P(k),  dJ/dk = (k^2 + 2k - 1) / (2(1+k)^2) at the defaults.
inline Plant scalar_plant(double a = -1.0, double b = 1.0, double b2 = 1.0, double q = 1.0,
                          double r = 1.0) {
  Plant p;
  p.A = Eigen::MatrixXd::Constant(1, 1, a);
  p.B1 = Eigen::MatrixXd::Constant(1, 1, b);
  p.B2 = Eigen::MatrixXd::Constant(1, 1, b2);
  p.Q = Eigen::MatrixXd::Constant(1, 1, q);
  p.R = Eigen::MatrixXd::Constant(1, 1, r);
  p.partition = BlockPartition::uniform(1, 1, 1);
  p.name = "scalar";
  return p;
}

inline Eigen::MatrixXd scalar1x1(double v) { return Eigen::MatrixXd::Constant(1, 1, v); }

inline Eigen::MatrixXd random_matrix(std::mt19937_64& eng, int rows, int cols,
                                     double scale = 1.0) {
  GaussianStream gauss(eng());
  Eigen::MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * gauss.next();
  return M;
}

// Random Hurwitz matrix: shift a random matrix left past its own abscissa.
inline Eigen::MatrixXd random_stable_matrix(std::mt19937_64& eng, int n, double margin = 0.5) {
  Eigen::MatrixXd M = random_matrix(eng, n, n);
  double a = spectral_abscissa(M).abscissa;
  M.diagonal().array() -= a + margin;
  return M;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& eng, int n, double ridge = 0.1) {
  Eigen::MatrixXd D = random_matrix(eng, n, n);
  return D * D.transpose() / n + ridge * Eigen::MatrixXd::Identity(n, n);
}

// Random stabilizable plant. A is left possibly unstable; generic (A, B1)
// pairs are controllable, and solve_care confirms that on use.
inline Plant random_plant(std::mt19937_64& eng, int n, int m, int l,
                          bool identity_weights = false) {
  Plant p;
  p.A = random_matrix(eng, n, n);
  p.B1 = random_matrix(eng, n, m);
  p.B2 = random_matrix(eng, n, l);
  if (identity_weights) {
    p.Q = Eigen::MatrixXd::Identity(n, n);
    p.R = Eigen::MatrixXd::Identity(m, m);
  } else {
    p.Q = random_spd(eng, n);
    p.R = random_spd(eng, m, 0.5);
  }
  p.partition = BlockPartition::uniform(1, m, n);
  return p;
}

// Like random_plant, but redraws until the Riccati solver accepts the pair.
// Gaussian draws are controllable almost surely, yet an occasional unstable
// draw has a numerically singular controllability Gramian; no double-precision
// method can stabilize those, and solve_care rejects them with a typed error.
inline Plant random_solvable_plant(std::mt19937_64& eng, int n, int m, int l,
                                   bool identity_weights = false) {
  for (int attempt = 0; attempt < 50; ++attempt) {
    Plant p = random_plant(eng, n, m, l, identity_weights);
    try {
      care_gain(p.A, p.B1, p.Q, p.R);
      return p;
    } catch (const NumericalError&) {
    }
  }
  throw std::runtime_error("random_solvable_plant: too many rejected draws");
}

// LQR gain plus noise, with the noise halved until the closed loop is stable
// again. Gives points that are feasible but off the Riccati optimum.
inline Eigen::MatrixXd random_stabilizing_gain(std::mt19937_64& eng, const Plant& p,
                                               double noise = 0.5) {
  Eigen::MatrixXd K0 = care_gain(p.A, p.B1, p.Q, p.R);
  Eigen::MatrixXd D = random_matrix(eng, static_cast<int>(K0.rows()),
                                    static_cast<int>(K0.cols()), noise);
  for (int halvings = 0; halvings < 60; ++halvings) {
    Eigen::MatrixXd K = K0 + D;
    if (spectral_abscissa(p.A - p.B1 * K).abscissa < -1e-6) return K;
    D *= 0.5;
  }
  return K0;
}

// Central finite differences of cost_J, the independent gradient oracle.
inline Eigen::MatrixXd fd_grad(const Plant& p, const Eigen::MatrixXd& K) {
  Eigen::MatrixXd G(K.rows(), K.cols());
  for (Eigen::Index i = 0; i < K.rows(); ++i) {
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const double h = 1e-6 * (1.0 + std::abs(K(i, j)));
      Eigen::MatrixXd Kp = K, Km = K;
      Kp(i, j) += h;
      Km(i, j) -= h;
      G(i, j) = (cost_J(p, Kp) - cost_J(p, Km)) / (2.0 * h);
    }
  }
  return G;
}

inline double rel_err(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

// Exhaustive-support projection onto the l0 ball: try every support of size
// <= s and keep the one closest to K. Only viable for small matrices.
inline Eigen::MatrixXd brute_force_l0(const Eigen::MatrixXd& K, long s) {
  const long total = static_cast<long>(K.size());
  Eigen::MatrixXd best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (long mask = 0; mask < (1L << total); ++mask) {
    long bits = 0;
    for (long f = 0; f < total; ++f) bits += (mask >> f) & 1L;
    if (bits > s) continue;
    Eigen::MatrixXd cand = Eigen::MatrixXd::Zero(K.rows(), K.cols());
    for (long f = 0; f < total; ++f)
      if ((mask >> f) & 1L) cand(f / K.cols(), f % K.cols()) = K(f / K.cols(), f % K.cols());
    double dist = (cand - K).norm();
    if (dist < best_dist) {
      best_dist = dist;
      best = cand;
    }
  }
  return best;
}

// Independent route to the l1 projection threshold: bisect lambda until the
// shrunk vector lands on the sphere of radius s.
inline Eigen::MatrixXd bisect_l1(const Eigen::MatrixXd& K, double s) {
  if (K.cwiseAbs().sum() <= s) return K;
  double lo = 0.0, hi = K.cwiseAbs().maxCoeff();
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (shrink(K, mid).cwiseAbs().sum() > s)
      lo = mid;
    else
      hi = mid;
  }
  return shrink(K, 0.5 * (lo + hi));
}

}  // namespace slqr::test
