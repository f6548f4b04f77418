#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <Eigen/Dense>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "helpers.hpp"
#include "slqr/io.hpp"
#include "slqr/linalg.hpp"
#include "slqr/systems.hpp"

using namespace slqr;
namespace fs = std::filesystem;

namespace {

Eigen::Matrix3d agent_drift() {
  Eigen::Matrix3d A;
  A << -6, 0, -3,  //
      3, -6, 0,    //
      0, 3, -6;
  return A;
}

fs::path scratch_dir() {
  fs::path dir = fs::temp_directory_path() / "slqr_systems_test";
  fs::create_directories(dir);
  return dir;
}

bool same_plant_bits(const Plant& a, const Plant& b) {
  return (a.A.array() == b.A.array()).all() && (a.B1.array() == b.B1.array()).all() &&
         (a.B2.array() == b.B2.array()).all() && (a.Q.array() == b.Q.array()).all() &&
         (a.R.array() == b.R.array()).all();
}

// A plant built so that nearly every noise draw destroys stabilizability:
// no actuation at all, so validity requires all eight perturbed diagonal
// entries of A to stay negative at once.
Plant fragile_plant() {
  Plant p;
  const int n = 8;
  p.A = -Eigen::MatrixXd::Identity(n, n);
  p.B1 = Eigen::MatrixXd::Zero(n, 1);
  p.B2 = Eigen::MatrixXd::Identity(n, n);
  p.Q = Eigen::MatrixXd::Identity(n, n);
  p.R = Eigen::MatrixXd::Identity(1, 1);
  p.partition = BlockPartition::uniform(1, 1, n);
  return p;
}

}  // namespace

TEST_CASE("single agent is the bare template") {
  Plant p = gen_multiagent(1);
  CHECK(p.n() == 3);
  CHECK(p.m() == 2);
  CHECK(p.l() == 3);
  CHECK((p.A - agent_drift()).norm() == 0.0);
  Eigen::MatrixXd B(3, 2);
  B << 3, 0, 0, 3, 0, 0;
  CHECK((p.B1 - B).norm() == 0.0);
  CHECK((p.B2 - 3.0 * Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK((p.Q - Eigen::MatrixXd::Identity(3, 3)).norm() == 0.0);
  CHECK((p.R - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("two agents couple through half-identity blocks") {
  Plant p = gen_multiagent(2);
  const Eigen::Matrix3d I = Eigen::Matrix3d::Identity();
  CHECK((p.A.block<3, 3>(0, 3) + 0.5 * I).norm() == 0.0);
  CHECK((p.A.block<3, 3>(3, 0) - 0.5 * I).norm() == 0.0);
  // Diagonal blocks absorb the drift correction.
  CHECK((p.A.block<3, 3>(0, 0) - (agent_drift() + 0.5 * I)).norm() == 0.0);
  CHECK((p.A.block<3, 3>(3, 3) - (agent_drift() - 0.5 * I)).norm() == 0.0);
  // Actuation is local: off-diagonal B1 blocks vanish.
  CHECK(p.B1.block<3, 2>(0, 2).norm() == 0.0);
  CHECK(p.B1.block<3, 2>(3, 0).norm() == 0.0);
  CHECK(p.partition.block_rows() == 2);
  CHECK(p.partition.row_sizes == std::vector<int>{2, 2});
  CHECK(p.partition.col_sizes == std::vector<int>{3, 3});
}

TEST_CASE("coupling blocks are skew across the diagonal") {
  Plant p = gen_multiagent(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      Eigen::Matrix3d Aij = p.A.block<3, 3>(3 * i, 3 * j);
      Eigen::Matrix3d Aji = p.A.block<3, 3>(3 * j, 3 * i);
      CHECK((Aij + Aji).norm() == 0.0);
      CHECK((Aij - 0.5 * (i - j) * Eigen::Matrix3d::Identity()).norm() == 0.0);
    }
}

TEST_CASE("five agents yield a 10 by 15 gain with 150 design variables") {
  Plant p = gen_multiagent(5);
  Eigen::MatrixXd K = care_gain(p.A, p.B1, p.Q, p.R);
  CHECK(K.rows() == 10);
  CHECK(K.cols() == 15);
  CHECK(K.size() == 150);
}

TEST_CASE("chains up to 20 agents stay stabilizable") {
  for (int N : {1, 2, 3, 5, 8, 12, 16, 20}) {
    Plant p = gen_multiagent(N);
    Eigen::MatrixXd K = care_gain(p.A, p.B1, p.Q, p.R);
    CHECK(spectral_abscissa(p.A - p.B1 * K).is_hurwitz);
  }
}

TEST_CASE("zero noise reproduces the base plant in every example") {
  DatasetSpec spec;
  spec.base = gen_multiagent(2);
  spec.count = 3;
  spec.noise_sigma = 0.0;
  spec.seed = 11;
  Dataset d = gen_dataset(spec, IstaConfig{});
  REQUIRE(d.examples.size() == 3);
  CHECK(d.rejections == 0);
  for (const LabeledExample& ex : d.examples) {
    CHECK(same_plant_bits(ex.plant, spec.base));
    CHECK((ex.k_star.K.array() == d.examples[0].k_star.K.array()).all());
  }
}

TEST_CASE("datasets are deterministic in the seed and perturb only structural nonzeros") {
  DatasetSpec spec;
  spec.base = gen_multiagent(2);
  spec.count = 4;
  spec.noise_sigma = 0.5;
  spec.seed = 42;
  Dataset a = gen_dataset(spec, IstaConfig{});
  Dataset b = gen_dataset(spec, IstaConfig{});
  REQUIRE(a.examples.size() == b.examples.size());
  for (std::size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(same_plant_bits(a.examples[i].plant, b.examples[i].plant));
    CHECK((a.examples[i].k_star.K.array() == b.examples[i].k_star.K.array()).all());
  }
  for (const LabeledExample& ex : a.examples) {
    // Default targets leave the input matrices alone.
    CHECK((ex.plant.B1.array() == spec.base.B1.array()).all());
    CHECK((ex.plant.B2.array() == spec.base.B2.array()).all());
    CHECK((ex.plant.A - spec.base.A).norm() > 0.0);
    for (Eigen::Index r = 0; r < ex.plant.A.rows(); ++r)
      for (Eigen::Index c = 0; c < ex.plant.A.cols(); ++c)
        if (spec.base.A(r, c) == 0.0) CHECK(ex.plant.A(r, c) == 0.0);
    CHECK(ex.k_star.abscissa < 0.0);
    CHECK(ex.k_star.J.has_value());
  }
}

TEST_CASE("wider targets also touch B1 and B2") {
  DatasetSpec spec;
  spec.base = gen_multiagent(2);
  spec.count = 2;
  spec.noise_sigma = 0.3;
  spec.seed = 9;
  spec.targets = PerturbTargets::AB1B2Nonzeros;
  Dataset d = gen_dataset(spec, IstaConfig{});
  for (const LabeledExample& ex : d.examples) {
    CHECK((ex.plant.B1 - spec.base.B1).norm() > 0.0);
    CHECK((ex.plant.B2 - spec.base.B2).norm() > 0.0);
    // Structural zeros survive even under the wider targets.
    CHECK(ex.plant.B1.block(0, 2, 3, 2).norm() == 0.0);
  }
}

TEST_CASE("parallel generation is byte-identical to serial") {
  DatasetSpec spec;
  spec.base = gen_multiagent(2);
  spec.count = 6;
  spec.noise_sigma = 0.5;
  spec.seed = 3;
  Dataset serial = gen_dataset(spec, IstaConfig{}, 1);
  Dataset parallel = gen_dataset(spec, IstaConfig{}, 3);
  REQUIRE(serial.examples.size() == parallel.examples.size());
  CHECK(serial.rejections == parallel.rejections);
  for (std::size_t i = 0; i < serial.examples.size(); ++i) {
    CHECK(same_plant_bits(serial.examples[i].plant, parallel.examples[i].plant));
    CHECK((serial.examples[i].k_star.K.array() == parallel.examples[i].k_star.K.array()).all());
  }
}

TEST_CASE("persistently invalid draws raise TooManyRejections") {
  DatasetSpec spec;
  spec.base = fragile_plant();
  spec.count = 3;
  spec.noise_sigma = 100.0;
  spec.seed = 7;
  CHECK_THROWS_AS(gen_dataset(spec, IstaConfig{}), TooManyRejections);
}

TEST_CASE("dataset input validation") {
  DatasetSpec spec;
  spec.base = gen_multiagent(1);
  spec.count = 0;
  CHECK_THROWS_AS(gen_dataset(spec, IstaConfig{}), InputError);
  spec.count = 1;
  spec.noise_sigma = -1.0;
  CHECK_THROWS_AS(gen_dataset(spec, IstaConfig{}), InputError);
  spec.noise_sigma = 1.0;
  CHECK_THROWS_AS(gen_dataset(spec, IstaConfig{}, 0), InputError);
}

TEST_CASE("plant files round trip bit for bit") {
  fs::path path = scratch_dir() / "plant_roundtrip.json";
  Plant p = gen_multiagent(3);
  save_plant(p, path.string());
  Plant q = load_plant(path.string());
  CHECK(same_plant_bits(p, q));
  CHECK(q.name == p.name);
  CHECK(q.partition.row_sizes == p.partition.row_sizes);
  CHECK(q.partition.col_sizes == p.partition.col_sizes);
}

TEST_CASE("dataset files round trip bit for bit") {
  DatasetSpec spec;
  spec.base = gen_multiagent(2);
  spec.count = 3;
  spec.noise_sigma = 0.4;
  spec.seed = 5;
  Dataset d = gen_dataset(spec, IstaConfig{});
  fs::path path = scratch_dir() / "dataset_roundtrip.json";
  save_dataset(d, path.string());
  Dataset e = load_dataset(path.string());
  REQUIRE(e.examples.size() == d.examples.size());
  for (std::size_t i = 0; i < d.examples.size(); ++i) {
    CHECK(same_plant_bits(d.examples[i].plant, e.examples[i].plant));
    CHECK((d.examples[i].k_star.K.array() == e.examples[i].k_star.K.array()).all());
    CHECK(d.examples[i].k_star.J.value() == e.examples[i].k_star.J.value());
  }
}

TEST_CASE("loading a plant with a missing field names the field") {
  fs::path path = scratch_dir() / "missing_b2.json";
  {
    Plant p = gen_multiagent(1);
    save_plant(p, path.string());
    std::ifstream in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("\"B2\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 4, "\"BX\"");
    std::ofstream out(path);
    out << text;
  }
  try {
    load_plant(path.string());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("B2") != std::string::npos);
  }
}

TEST_CASE("loading rejects inconsistent files") {
  fs::path dir = scratch_dir();

  fs::path bad_q = dir / "bad_q.json";
  {
    Plant p = gen_multiagent(1);
    p.Q(0, 1) = 0.5;  // breaks symmetry
    // validate() would refuse to save this, so write the JSON by hand.
    std::ofstream out(bad_q);
    nlohmann::json j;
    j["name"] = "bad";
    j["n"] = p.n();
    j["m"] = p.m();
    j["l"] = p.l();
    auto mat = [](const Eigen::MatrixXd& M) {
      nlohmann::json rows = nlohmann::json::array();
      for (Eigen::Index i = 0; i < M.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index jj = 0; jj < M.cols(); ++jj) row.push_back(M(i, jj));
        rows.push_back(row);
      }
      return rows;
    };
    j["A"] = mat(p.A);
    j["B1"] = mat(p.B1);
    j["B2"] = mat(p.B2);
    j["Q"] = mat(p.Q);
    j["R"] = mat(p.R);
    j["partition"] = {{"row_sizes", p.partition.row_sizes}, {"col_sizes", p.partition.col_sizes}};
    out << j.dump(2);
  }
  CHECK_THROWS_AS(load_plant(bad_q.string()), InvalidWeights);

  fs::path bad_n = dir / "bad_n.json";
  {
    Plant p = gen_multiagent(1);
    save_plant(p, bad_n.string());
    std::ifstream in(bad_n);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("\"n\": 3");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "\"n\": 4");
    std::ofstream out(bad_n);
    out << text;
  }
  CHECK_THROWS_AS(load_plant(bad_n.string()), DimensionMismatch);

  fs::path garbage = dir / "garbage.json";
  {
    std::ofstream out(garbage);
    out << "not json at all {";
  }
  CHECK_THROWS_AS(load_plant(garbage.string()), ParseError);

  CHECK_THROWS_AS(load_plant((dir / "does_not_exist.json").string()), IoError);
}

TEST_CASE("gen_multiagent rejects nonpositive N") {
  CHECK_THROWS_AS(gen_multiagent(0), InputError);
  CHECK_THROWS_AS(gen_multiagent(-2), InputError);
}
