#include "slqr/io.hpp"

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "slqr/errors.hpp"

namespace slqr {

using nlohmann::json;

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  if (!out) throw IoError("write failed on " + path);
}

json parse_file(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

const json& require(const json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + ": missing field \"" + key + "\"");
  return *it;
}

double require_number(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ParseError(path + ": field \"" + key + "\" must be a number");
  return v.get<double>();
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array() || v.empty())
    throw ParseError(path + ": field \"" + key + "\" must be a non-empty array of rows");
  const std::size_t rows = v.size();
  if (!v[0].is_array())
    throw ParseError(path + ": field \"" + key + "\" must contain array rows");
  const std::size_t cols = v[0].size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      throw ParseError(path + ": field \"" + key + "\" has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!v[i][c].is_number())
        throw ParseError(path + ": field \"" + key + "\" has a non-numeric entry");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[i][c].get<double>();
    }
  }
  return M;
}

std::vector<int> sizes_from_json(const json& j, const char* key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array()) throw ParseError(path + ": field \"" + key + "\" must be an array");
  std::vector<int> out;
  for (const json& e : v) {
    if (!e.is_number_integer() || e.get<long>() < 1)
      throw ParseError(path + ": field \"" + key + "\" entries must be positive integers");
    out.push_back(e.get<int>());
  }
  return out;
}

json partition_to_json(const BlockPartition& p) {
  return json{{"row_sizes", p.row_sizes}, {"col_sizes", p.col_sizes}};
}

BlockPartition partition_from_json(const json& j, const std::string& path) {
  const json& v = require(j, "partition", path);
  BlockPartition p;
  p.row_sizes = sizes_from_json(v, "row_sizes", path);
  p.col_sizes = sizes_from_json(v, "col_sizes", path);
  return p;
}

json gain_to_json(const GainFile& g) {
  return json{{"K", matrix_to_json(g.K)},
              {"J", g.J},
              {"G", g.G},
              {"gamma_or_radius", g.gamma_or_radius},
              {"algorithm", g.algorithm},
              {"iterations", g.iterations},
              {"converged", g.converged},
              {"abscissa", g.abscissa},
              {"nnz", g.nnz}};
}

GainFile gain_from_json(const json& j, const std::string& path) {
  GainFile g;
  g.K = matrix_from_json(j, "K", path);
  g.J = require_number(j, "J", path);
  g.G = require_number(j, "G", path);
  g.gamma_or_radius = require_number(j, "gamma_or_radius", path);
  const json& algo = require(j, "algorithm", path);
  if (!algo.is_string()) throw ParseError(path + ": field \"algorithm\" must be a string");
  g.algorithm = algo.get<std::string>();
  g.iterations = static_cast<int>(require_number(j, "iterations", path));
  const json& conv = require(j, "converged", path);
  if (!conv.is_boolean()) throw ParseError(path + ": field \"converged\" must be a boolean");
  g.converged = conv.get<bool>();
  g.abscissa = require_number(j, "abscissa", path);
  g.nnz = static_cast<long>(require_number(j, "nnz", path));
  return g;
}

// Two-space indent keeps the files diffable; dump() itself guarantees the
// doubles round trip.
std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

void save_plant(const Plant& plant, const std::string& path) {
  plant.validate();
  json j{{"name", plant.name},
         {"n", plant.n()},
         {"m", plant.m()},
         {"l", plant.l()},
         {"A", matrix_to_json(plant.A)},
         {"B1", matrix_to_json(plant.B1)},
         {"B2", matrix_to_json(plant.B2)},
         {"Q", matrix_to_json(plant.Q)},
         {"R", matrix_to_json(plant.R)},
         {"partition", partition_to_json(plant.partition)}};
  write_text(path, dump(j));
}

Plant load_plant(const std::string& path) {
  const json j = parse_file(path);
  Plant p;
  if (j.contains("name") && j["name"].is_string()) p.name = j["name"].get<std::string>();
  p.A = matrix_from_json(j, "A", path);
  p.B1 = matrix_from_json(j, "B1", path);
  p.B2 = matrix_from_json(j, "B2", path);
  p.Q = matrix_from_json(j, "Q", path);
  p.R = matrix_from_json(j, "R", path);
  p.partition = partition_from_json(j, path);
  const int n = static_cast<int>(require_number(j, "n", path));
  const int m = static_cast<int>(require_number(j, "m", path));
  const int l = static_cast<int>(require_number(j, "l", path));
  if (n != p.A.rows() || m != p.B1.cols() || l != p.B2.cols())
    throw DimensionMismatch(path + ": declared n/m/l do not match matrix shapes");
  p.validate();
  return p;
}

void save_gain(const GainFile& gain, const std::string& path) {
  write_text(path, dump(gain_to_json(gain)));
}

GainFile load_gain(const std::string& path) { return gain_from_json(parse_file(path), path); }

void save_net(const UnrolledNet& net, const std::string& path) {
  net.validate();
  json layers = json::array();
  for (const LayerParams& lp : net.layers)
    layers.push_back(json{{"w1", lp.w1}, {"w2", lp.w2}, {"w3", lp.w3}});
  json j{{"l", net.depth()},
         {"sparsity_op", net.op == SparsityOp::Elementwise ? "elementwise" : "block"},
         {"layers", std::move(layers)},
         {"partition", partition_to_json(net.partition)}};
  write_text(path, dump(j));
}

UnrolledNet load_net(const std::string& path) {
  const json j = parse_file(path);
  UnrolledNet net;
  const json& op = require(j, "sparsity_op", path);
  if (op == "elementwise")
    net.op = SparsityOp::Elementwise;
  else if (op == "block")
    net.op = SparsityOp::Block;
  else
    throw ParseError(path + ": field \"sparsity_op\" must be \"elementwise\" or \"block\"");
  const json& layers = require(j, "layers", path);
  if (!layers.is_array() || layers.empty())
    throw ParseError(path + ": field \"layers\" must be a non-empty array");
  for (const json& lj : layers) {
    LayerParams lp;
    lp.w1 = require_number(lj, "w1", path);
    lp.w2 = require_number(lj, "w2", path);
    lp.w3 = require_number(lj, "w3", path);
    net.layers.push_back(lp);
  }
  if (static_cast<int>(require_number(j, "l", path)) != net.depth())
    throw ParseError(path + ": field \"l\" does not match the layer count");
  if (j.contains("partition")) {
    const json& v = j["partition"];
    net.partition.row_sizes = sizes_from_json(v, "row_sizes", path);
    net.partition.col_sizes = sizes_from_json(v, "col_sizes", path);
  }
  net.validate();
  return net;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  json examples = json::array();
  for (const LabeledExample& ex : dataset.examples) {
    json plant{{"name", ex.plant.name},
               {"n", ex.plant.n()},
               {"m", ex.plant.m()},
               {"l", ex.plant.l()},
               {"A", matrix_to_json(ex.plant.A)},
               {"B1", matrix_to_json(ex.plant.B1)},
               {"B2", matrix_to_json(ex.plant.B2)},
               {"Q", matrix_to_json(ex.plant.Q)},
               {"R", matrix_to_json(ex.plant.R)},
               {"partition", partition_to_json(ex.plant.partition)}};
    json k_star{{"K", matrix_to_json(ex.k_star.K)}, {"abscissa", ex.k_star.abscissa}};
    if (ex.k_star.J) k_star["J"] = *ex.k_star.J;
    examples.push_back(json{{"plant", std::move(plant)}, {"k_star", std::move(k_star)}});
  }
  json j{{"count", dataset.examples.size()},
         {"rejections", dataset.rejections},
         {"examples", std::move(examples)}};
  write_text(path, dump(j));
}

Dataset load_dataset(const std::string& path) {
  const json j = parse_file(path);
  const json& examples = require(j, "examples", path);
  if (!examples.is_array()) throw ParseError(path + ": field \"examples\" must be an array");
  Dataset out;
  out.rejections = static_cast<long>(require_number(j, "rejections", path));
  for (const json& ej : examples) {
    const json& pj = require(ej, "plant", path);
    LabeledExample ex;
    if (pj.contains("name") && pj["name"].is_string())
      ex.plant.name = pj["name"].get<std::string>();
    ex.plant.A = matrix_from_json(pj, "A", path);
    ex.plant.B1 = matrix_from_json(pj, "B1", path);
    ex.plant.B2 = matrix_from_json(pj, "B2", path);
    ex.plant.Q = matrix_from_json(pj, "Q", path);
    ex.plant.R = matrix_from_json(pj, "R", path);
    ex.plant.partition = partition_from_json(pj, path);
    ex.plant.validate();
    const json& kj = require(ej, "k_star", path);
    ex.k_star.K = matrix_from_json(kj, "K", path);
    ex.k_star.abscissa = require_number(kj, "abscissa", path);
    if (kj.contains("J")) ex.k_star.J = kj["J"].get<double>();
    out.examples.push_back(std::move(ex));
  }
  if (static_cast<std::size_t>(require_number(j, "count", path)) != out.examples.size())
    throw ParseError(path + ": field \"count\" does not match the example count");
  return out;
}

void write_trace_csv(const SolveTrace& trace, const std::string& path) {
  std::ostringstream out;
  out << "iter,F,J,G,rho,nnz,abscissa,backtracks\n";
  for (const TraceEntry& e : trace.entries) {
    out << e.iter << ',' << fmt17(e.F) << ',' << fmt17(e.J) << ',' << fmt17(e.G) << ','
        << fmt17(e.rho_or_step) << ',' << e.nnz << ',' << fmt17(e.abscissa) << ','
        << e.backtracks << '\n';
  }
  write_text(path, out.str());
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ostringstream out;
  out << "value,J,G,nnz,iters,lyap_solves\n";
  for (const SweepRow& r : rows) {
    out << fmt17(r.value) << ',' << fmt17(r.J) << ',' << fmt17(r.G) << ',' << r.nnz << ','
        << r.iters << ',' << r.lyap_solves << '\n';
  }
  write_text(path, out.str());
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  throw ParseError("csv table has no column \"" + name + "\"");
}

CsvTable read_csv(const std::string& path) {
  const std::string text = read_text(path);
  CsvTable table;
  std::istringstream lines(text);
  std::string line;
  bool first = true;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
      continue;
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const std::string& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (end == c.c_str() || *end != '\0')
        throw ParseError(path + ": non-numeric csv cell \"" + c + "\"");
      row.push_back(v);
    }
    table.rows.push_back(std::move(row));
  }
  if (first) throw ParseError(path + ": empty csv file");
  return table;
}

std::string fnv1a64_file(const std::string& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  json inputs = json::array();
  for (const auto& [p, h] : manifest.inputs) inputs.push_back(json{{"path", p}, {"fnv1a64", h}});
  json outputs = json::array();
  for (const auto& [p, h] : manifest.outputs)
    outputs.push_back(json{{"path", p}, {"fnv1a64", h}});
  json j{{"tool_version", manifest.tool_version},
         {"argv", manifest.argv},
         {"config", manifest.config},
         {"inputs", std::move(inputs)},
         {"outputs", std::move(outputs)},
         {"wall_time_s", manifest.wall_time_s},
         {"exit_code", manifest.exit_code}};
  write_text(path, dump(j));
}

RunManifest load_manifest(const std::string& path) {
  const json j = parse_file(path);
  RunManifest m;
  const json& ver = require(j, "tool_version", path);
  if (!ver.is_string()) throw ParseError(path + ": field \"tool_version\" must be a string");
  m.tool_version = ver.get<std::string>();
  const json& argv = require(j, "argv", path);
  if (!argv.is_array()) throw ParseError(path + ": field \"argv\" must be an array");
  for (const json& a : argv) {
    if (!a.is_string()) throw ParseError(path + ": field \"argv\" must hold strings");
    m.argv.push_back(a.get<std::string>());
  }
  m.config = require(j, "config", path);
  for (const char* key : {"inputs", "outputs"}) {
    const json& arr = require(j, key, path);
    if (!arr.is_array()) throw ParseError(path + ": field \"" + std::string(key) +
                                          "\" must be an array");
    for (const json& e : arr) {
      const json& p = require(e, "path", path);
      const json& h = require(e, "fnv1a64", path);
      if (!p.is_string() || !h.is_string())
        throw ParseError(path + ": manifest entries need string path and fnv1a64");
      auto& dst = std::string(key) == "inputs" ? m.inputs : m.outputs;
      dst.emplace_back(p.get<std::string>(), h.get<std::string>());
    }
  }
  m.wall_time_s = require_number(j, "wall_time_s", path);
  m.exit_code = static_cast<int>(require_number(j, "exit_code", path));
  return m;
}

}  // namespace slqr
