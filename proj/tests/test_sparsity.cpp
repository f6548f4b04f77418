#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "slqr/sparsity.hpp"

using namespace slqr;
using test::random_matrix;

namespace {

Eigen::MatrixXd row(std::initializer_list<double> xs) {
  Eigen::MatrixXd M(1, static_cast<Eigen::Index>(xs.size()));
  Eigen::Index j = 0;
  for (double x : xs) M(0, j++) = x;
  return M;
}

}  // namespace

using test::bisect_l1;
using test::brute_force_l0;

TEST_CASE("g_value") {
  BlockPartition one = BlockPartition::uniform(1, 1, 2);
  Regularizer l1;
  CHECK(g_value(row({2.0, -0.5}), l1, one) == doctest::Approx(2.5));

  Regularizer block;
  block.kind = RegKind::BlockL1;
  BlockPartition two = BlockPartition::uniform(2, 1, 2);
  Eigen::MatrixXd K(2, 4);
  K << 3, 0, 0, 0, 0, 0, 0, 1;
  CHECK(g_value(K, block, two) == doctest::Approx(4.0));

  Regularizer wl1;
  wl1.kind = RegKind::WeightedL1;
  wl1.weights = Eigen::MatrixXd::Ones(1, 2);
  CHECK(g_value(row({2.0, -0.5}), wl1, one) == doctest::Approx(2.5));

  CHECK_THROWS_AS(g_value(K, block, BlockPartition::uniform(2, 1, 1)), PartitionMismatch);
}

TEST_CASE("shrink") {
  CHECK(test::rel_err(shrink(row({2.0, -0.5, 1.0}), 1.0), row({1.0, 0.0, 0.0})) == 0.0);
  Eigen::MatrixXd K = row({0.3, -1.7, 0.0});
  CHECK(test::rel_err(shrink(K, 0.0), K) == 0.0);
  CHECK(shrink(row({1.25}), 0.1)(0, 0) == doctest::Approx(1.15));
  CHECK_THROWS_AS(shrink(K, -0.1), InputError);
}

TEST_CASE("shrink solves the scalar prox problem") {
  // argmin_z a|z| + (1/2)(z - x)^2 located by grid search; the operator must
  // land within one grid pitch of it.
  const double pitch = 1e-3;
  std::mt19937_64 eng(211);
  for (int trial = 0; trial < 20; ++trial) {
    double x = 4.0 * (test::random_matrix(eng, 1, 1)(0, 0));
    double a = std::abs(test::random_matrix(eng, 1, 1)(0, 0));
    double best_z = 0.0, best_val = std::numeric_limits<double>::infinity();
    for (double z = -std::abs(x) - 1.0; z <= std::abs(x) + 1.0; z += pitch) {
      double val = a * std::abs(z) + 0.5 * (z - x) * (z - x);
      if (val < best_val) {
        best_val = val;
        best_z = z;
      }
    }
    CHECK(std::abs(shrink(row({x}), a)(0, 0) - best_z) <= pitch);
  }
}

TEST_CASE("shrink_block") {
  BlockPartition p = BlockPartition::uniform(1, 1, 2);
  CHECK(test::rel_err(shrink_block(row({3.0, 0.0}), 1.0, p), row({2.0, 0.0})) < 1e-15);
  CHECK(shrink_block(row({0.0, 0.0}), 5.0, p).norm() == 0.0);
  // Norm-5 block killed exactly at threshold 5.
  CHECK(shrink_block(row({3.0, 4.0}), 5.0, p).norm() == 0.0);
  // Direction preserved, norm reduced by a.
  Eigen::MatrixXd out = shrink_block(row({3.0, 4.0}), 1.0, p);
  CHECK(out.norm() == doctest::Approx(4.0));
  CHECK(out(0, 0) / out(0, 1) == doctest::Approx(0.75));
}

TEST_CASE("weighted shrinks") {
  Eigen::MatrixXd K = row({2.0, -0.5, 1.0});

  SUBCASE("unit weights reduce to plain shrink") {
    Eigen::MatrixXd W = Eigen::MatrixXd::Ones(1, 3);
    CHECK(test::rel_err(shrink_weighted(K, 0.7, W), shrink(K, 0.7)) == 0.0);
  }

  SUBCASE("a huge weight zeroes its entry") {
    Eigen::MatrixXd W = row({1.0, 1.0, 1e4});
    CHECK(shrink_weighted(row({0.5, 0.5, 1.0}), 0.01, W)(0, 2) == 0.0);
  }

  SUBCASE("reweighting keeps large entries alive") {
    // w = 1/(|K| + eps) with |K| = 1e3 gives a threshold near 1e-3 at
    // gamma/rho = 1, nowhere near enough to kill the entry.
    double w = 1.0 / (1e3 + 1e-4);
    CHECK(shrink_weighted(row({1e3}), 1.0, row({w}))(0, 0) != 0.0);
  }

  SUBCASE("block variant matches hand arithmetic") {
    BlockPartition p = BlockPartition::uniform(1, 1, 2);
    Eigen::MatrixXd W = Eigen::MatrixXd::Constant(1, 1, 2.0);
    CHECK(test::rel_err(shrink_block_weighted(row({3.0, 0.0}), 0.5, W, p), row({2.0, 0.0})) <
          1e-15);
  }
}

TEST_CASE("update_weights") {
  BlockPartition one = BlockPartition::uniform(1, 1, 2);
  Regularizer reg;
  reg.kind = RegKind::WeightedL1;
  reg.epsilon = 1e-4;

  Regularizer w = update_weights(row({1.0, 0.0}), reg, one);
  CHECK(w.weights(0, 0) == doctest::Approx(1.0 / (1.0 + 1e-4)).epsilon(1e-12));
  CHECK(w.weights(0, 1) == doctest::Approx(1e4).epsilon(1e-12));

  Regularizer w0 = update_weights(row({0.0, 0.0}), reg, one);
  CHECK(w0.weights.minCoeff() == doctest::Approx(1e4));

  // Weights track the iterate rather than being a fixed point.
  Regularizer w2 = update_weights(row({2.0, 0.0}), reg, one);
  CHECK(w2.weights(0, 0) != w.weights(0, 0));

  Regularizer plain;
  CHECK_THROWS_AS(update_weights(row({1.0, 0.0}), plain, one), WrongKind);
}

TEST_CASE("project_l0 closed forms and tie rule") {
  CHECK(test::rel_err(project_l0(row({3.0, -1.0, 2.0}), 2), row({3.0, 0.0, 2.0})) == 0.0);

  Eigen::MatrixXd K = row({1.0, 0.0, -0.5});
  CHECK(test::rel_err(project_l0(K, 2), K) == 0.0);  // s >= nnz keeps everything
  CHECK(test::rel_err(project_l0(K, 3), K) == 0.0);

  // Ties broken toward the lowest flat index.
  CHECK(test::rel_err(project_l0(row({1.0, -1.0, 1.0}), 2), row({1.0, -1.0, 0.0})) == 0.0);

  CHECK_THROWS_AS(project_l0(K, 0), BadRadius);
  CHECK_THROWS_AS(project_l0(K, 4), BadRadius);
}

TEST_CASE("project_l0 matches the exhaustive-support oracle") {
  std::mt19937_64 eng(223);
  for (int trial = 0; trial < 10; ++trial) {
    int rows = 1 + static_cast<int>(eng() % 3);
    int cols = 1 + static_cast<int>(eng() % 4);
    Eigen::MatrixXd K = random_matrix(eng, rows, cols);
    for (long s = 1; s <= K.size(); ++s) {
      Eigen::MatrixXd got = project_l0(K, s);
      Eigen::MatrixXd best = brute_force_l0(K, s);
      // The oracle may pick a different support on exact magnitude ties, but
      // the achieved distance must match.
      CHECK((got - K).norm() == doctest::Approx((best - K).norm()).epsilon(1e-12));
      CHECK(nnz(got) <= s);
    }
  }
}

TEST_CASE("project_l1 closed forms") {
  CHECK(test::rel_err(project_l1(row({3.0, 1.0}), 2.0), row({2.0, 0.0})) < 1e-12);
  Eigen::MatrixXd inside = row({0.5, 0.3});
  CHECK(test::rel_err(project_l1(inside, 2.0), inside) == 0.0);
  CHECK(test::rel_err(project_l1(row({2.0, 2.0}), 2.0), row({1.0, 1.0})) < 1e-12);
  // Exactly on the boundary: returned untouched.
  Eigen::MatrixXd edge = row({1.5, -0.5});
  CHECK(test::rel_err(project_l1(edge, 2.0), edge) == 0.0);
  CHECK_THROWS_AS(project_l1(edge, 0.0), BadRadius);
}

TEST_CASE("project_l1 matches the bisection oracle on 1000 random vectors") {
  std::mt19937_64 eng(227);
  for (int trial = 0; trial < 1000; ++trial) {
    int rows = 1 + static_cast<int>(eng() % 4);
    int cols = 1 + static_cast<int>(eng() % 5);
    Eigen::MatrixXd K = random_matrix(eng, rows, cols, 2.0);
    double s = 0.1 + 3.0 * std::abs(random_matrix(eng, 1, 1)(0, 0));

    Eigen::MatrixXd got = project_l1(K, s);
    CHECK((got - bisect_l1(K, s)).norm() <= 1e-8);
    if (K.cwiseAbs().sum() > s)
      CHECK(std::abs(got.cwiseAbs().sum() - s) <= 1e-10 * std::max(1.0, s));
  }
}

TEST_CASE("project_l1 output is locally optimal inside the ball") {
  std::mt19937_64 eng(229);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd K = random_matrix(eng, 2, 3, 2.0);
    double s = 0.5 * K.cwiseAbs().sum() + 0.01;  // strictly outside
    Eigen::MatrixXd out = project_l1(K, s);
    double base = (out - K).norm();
    for (int probe = 0; probe < 20; ++probe) {
      Eigen::MatrixXd d = random_matrix(eng, 2, 3);
      d *= 1e-3 / d.norm();
      Eigen::MatrixXd feasible = project_l1(out + d, s);
      CHECK((feasible - K).norm() >= base - 1e-12);
    }
  }
}

TEST_CASE("projections are idempotent") {
  std::mt19937_64 eng(233);
  BlockPartition p = BlockPartition::uniform(2, 1, 3);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::MatrixXd K = random_matrix(eng, 2, 6, 2.0);

    Eigen::MatrixXd a = project_l0(K, 4);
    CHECK((project_l0(a, 4) - a).norm() <= 1e-12);

    Eigen::MatrixXd b = project_l1(K, 1.5);
    CHECK((project_l1(b, 1.5) - b).norm() <= 1e-12);

    Eigen::MatrixXd c = project_block(K, 1.5, p);
    CHECK((project_block(c, 1.5, p) - c).norm() <= 1e-12);
  }
}

TEST_CASE("l1 and block projections are non-expansive") {
  std::mt19937_64 eng(239);
  BlockPartition p = BlockPartition::uniform(2, 1, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::MatrixXd x = random_matrix(eng, 2, 4, 2.0);
    Eigen::MatrixXd y = random_matrix(eng, 2, 4, 2.0);
    CHECK((project_l1(x, 1.0) - project_l1(y, 1.0)).norm() <= (x - y).norm() + 1e-12);
    CHECK((project_block(x, 1.0, p) - project_block(y, 1.0, p)).norm() <=
          (x - y).norm() + 1e-12);
  }
}

TEST_CASE("project_block") {
  BlockPartition p = BlockPartition::uniform(2, 1, 2);
  Eigen::MatrixXd K(2, 4);
  K << 3, 0, 0, 0, 0, 0, 0, 1;  // block norms 3 and 1

  Eigen::MatrixXd want = Eigen::MatrixXd::Zero(2, 4);
  want(0, 0) = 2.0;
  CHECK(test::rel_err(project_block(K, 2.0, p), want) < 1e-12);

  CHECK(test::rel_err(project_block(K, 5.0, p), K) == 0.0);  // sum of norms inside

  SUBCASE("block norms land on the sphere, directions preserved") {
    std::mt19937_64 eng(241);
    BlockPartition q = BlockPartition::uniform(2, 2, 2);
    Eigen::MatrixXd M = random_matrix(eng, 4, 4, 2.0);
    double s = 1.7;
    Eigen::MatrixXd out = project_block(M, s, q);
    double total = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto bin = q.block(M, i, j);
        auto bout = q.block(out, i, j);
        total += bout.norm();
        if (bout.norm() > 0.0) {
          // Nonnegative scaling of the input block.
          double scale = bout.norm() / bin.norm();
          CHECK((bout - scale * bin).norm() <= 1e-12);
        }
      }
    CHECK(total == doctest::Approx(s).epsilon(1e-10));
  }
}

TEST_CASE("project_block with 1x1 blocks equals project_l1 exactly") {
  std::mt19937_64 eng(251);
  BlockPartition singletons;
  singletons.row_sizes = {1};
  singletons.col_sizes = {1, 1, 1, 1, 1, 1};
  BlockPartition grid;
  grid.row_sizes = {1, 1};
  grid.col_sizes = {1, 1, 1};
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd K1 = random_matrix(eng, 1, 6, 2.0);
    CHECK((project_block(K1, 1.2, singletons) - project_l1(K1, 1.2)).norm() == 0.0);
    Eigen::MatrixXd K2 = random_matrix(eng, 2, 3, 2.0);
    CHECK((project_block(K2, 1.2, grid) - project_l1(K2, 1.2)).norm() == 0.0);
  }
}

TEST_CASE("monotone_g agrees with g_value for plain kinds") {
  std::mt19937_64 eng(257);
  BlockPartition p = BlockPartition::uniform(2, 1, 2);
  Eigen::MatrixXd K = random_matrix(eng, 2, 4);
  Regularizer l1;
  CHECK(monotone_g(K, l1, p) == g_value(K, l1, p));
  Regularizer bl1;
  bl1.kind = RegKind::BlockL1;
  CHECK(monotone_g(K, bl1, p) == g_value(K, bl1, p));
  // The weighted kinds use the concave log form: zero at 0, increasing in |K|.
  Regularizer wl1;
  wl1.kind = RegKind::WeightedL1;
  CHECK(monotone_g(Eigen::MatrixXd::Zero(2, 4), wl1, p) == 0.0);
  CHECK(monotone_g(K, wl1, p) > 0.0);
}

TEST_CASE("ball_measure and project_ball dispatch") {
  BlockPartition p = BlockPartition::uniform(2, 1, 2);
  Eigen::MatrixXd K(2, 4);
  K << 3, 0, 0, 0, 0, 0, 0, 1;

  Ball l0{BallKind::L0, 2.0};
  CHECK(ball_measure(K, l0, p) == 2.0);
  CHECK((project_ball(K, l0, p) - project_l0(K, 2)).norm() == 0.0);

  Ball l1{BallKind::L1, 2.5};
  CHECK(ball_measure(K, l1, p) == doctest::Approx(4.0));
  CHECK((project_ball(K, l1, p) - project_l1(K, 2.5)).norm() == 0.0);

  Ball bl{BallKind::BlockL1, 2.0};
  CHECK(ball_measure(K, bl, p) == doctest::Approx(4.0));
  CHECK((project_ball(K, bl, p) - project_block(K, 2.0, p)).norm() == 0.0);
}
