#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "slqr/plant.hpp"
#include "slqr/solvers.hpp"
#include "slqr/systems.hpp"
#include "slqr/tuner.hpp"

namespace slqr {

// Decimal formatting used for every real number in CSV output: 17 significant
// digits, enough for an exact double round trip.
std::string fmt17(double x);

void save_plant(const Plant& plant, const std::string& path);
Plant load_plant(const std::string& path);

// Gain file payload. J and G are the objective pieces at K; gamma_or_radius
// records the penalty weight (penalized runs) or ball radius (projected runs).
struct GainFile {
  Eigen::MatrixXd K;
  double J = 0.0;
  double G = 0.0;
  double gamma_or_radius = 0.0;
  std::string algorithm;
  int iterations = 0;
  bool converged = false;
  double abscissa = 0.0;
  long nnz = 0;
};

void save_gain(const GainFile& gain, const std::string& path);
GainFile load_gain(const std::string& path);

void save_net(const UnrolledNet& net, const std::string& path);
UnrolledNet load_net(const std::string& path);

void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Per-iteration trace with the fixed column set shared by all solvers.
void write_trace_csv(const SolveTrace& trace, const std::string& path);

struct SweepRow {
  double value = 0.0;
  double J = 0.0;
  double G = 0.0;
  long nnz = 0;
  int iters = 0;
  long lyap_solves = 0;
};

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// Generic numeric CSV reader for checking emitted tables.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // throws ParseError if absent
};

CsvTable read_csv(const std::string& path);

// FNV-1a over the file bytes, as a fixed-width hex string.
std::string fnv1a64_file(const std::string& path);

// Everything needed to re-run a CLI invocation and check it reproduced:
// the argv tokens after the program name, the resolved configuration, and
// content hashes of the inputs consumed and outputs produced.
struct RunManifest {
  std::string tool_version;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::vector<std::pair<std::string, std::string>> inputs;   // path, hash
  std::vector<std::pair<std::string, std::string>> outputs;  // path, hash
  double wall_time_s = 0.0;
  int exit_code = 0;
};

void save_manifest(const RunManifest& manifest, const std::string& path);
RunManifest load_manifest(const std::string& path);

}  // namespace slqr
