#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "slqr/errors.hpp"
#include "slqr/partition.hpp"

namespace slqr {

// Continuous-time plant  dx = A x + B1 u + B2 w,  u = -K x,  with LQR
// weights Q (state) and R (input) and the agent block partition of K.
struct Plant {
  Eigen::MatrixXd A;   // n x n
  Eigen::MatrixXd B1;  // n x m, control input
  Eigen::MatrixXd B2;  // n x l, disturbance input
  Eigen::MatrixXd Q;   // n x n, symmetric PSD
  Eigen::MatrixXd R;   // m x m, symmetric PD
  BlockPartition partition;
  std::string name;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B1.cols()); }
  int l() const { return static_cast<int>(B2.cols()); }

  // Shape, symmetry, and definiteness checks (tolerance 1e-10).
  void validate() const;
};

struct Gain {
  Eigen::MatrixXd K;
  double abscissa = 0.0;  // of A - B1 K, cached at construction
  std::optional<double> J;
};

struct LyapunovPair {
  Eigen::MatrixXd P;
  Eigen::MatrixXd L;
};

}  // namespace slqr
