// Command-line front end: plant generation, single solves, gamma/radius
// sweeps, dataset generation, and unrolled-net training and evaluation.
// Every run drops a <out>.manifest.json recording argv, the resolved
// configuration, and content hashes of inputs and outputs; `slqr replay`
// re-executes a manifest and checks the outputs reproduce byte for byte.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slqr/baselines.hpp"
#include "slqr/errors.hpp"
#include "slqr/io.hpp"
#include "slqr/linalg.hpp"
#include "slqr/objective.hpp"
#include "slqr/solvers.hpp"
#include "slqr/sparsity.hpp"
#include "slqr/systems.hpp"
#include "slqr/tuner.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

using nlohmann::json;

int run_cli(const std::vector<std::string>& args);  // for replay

// Exit codes: 0 converged, 2 finished without convergence, 1 usage,
// 3 bad input, 4 numerical failure.
enum ExitCode { kOk = 0, kUsage = 1, kNotConverged = 2, kBadInput = 3, kNumerical = 4 };

struct SolverFlags {
  std::string algo = "ista";
  double gamma = 1.0;
  std::string reg = "l1";
  double epsilon = 1e-4;
  double rho0 = 100.0;
  double alpha = 1.5;
  double tol = 1e-4;
  int max_iter = 0;  // 0 keeps each algorithm's own default
  int max_backtracks = 60;
  double momentum_scale = 1.0;
  bool accept_on_stability = false;

  std::string ball = "l0";
  double radius = 0.0;
  double ispa_rho0 = 1.0;
  double ispa_alpha = 0.7;
  double armijo_c = 1e-4;

  double admm_rho = 100.0;
  double eps_abs = 1e-4;
  double eps_rel = 1e-2;
  int inner_steps = 0;  // 0 keeps the per-algorithm default
  double inner_tol = 1e-6;

  long budget = 0;
  bool block_mode = false;
  bool prune_diagonal = false;
};

slqr::Regularizer make_regularizer(const SolverFlags& f) {
  slqr::Regularizer reg;
  if (f.reg == "l1")
    reg.kind = slqr::RegKind::L1;
  else if (f.reg == "wl1")
    reg.kind = slqr::RegKind::WeightedL1;
  else if (f.reg == "bl1")
    reg.kind = slqr::RegKind::BlockL1;
  else
    reg.kind = slqr::RegKind::WeightedBlockL1;
  reg.epsilon = f.epsilon;
  return reg;
}

slqr::Ball make_ball(const SolverFlags& f) {
  slqr::Ball ball;
  ball.kind = f.ball == "l0"   ? slqr::BallKind::L0
              : f.ball == "l1" ? slqr::BallKind::L1
                               : slqr::BallKind::BlockL1;
  ball.radius = f.radius;
  return ball;
}

struct SolveOutput {
  slqr::SolveResult res;
  double G = 0.0;  // penalty value / ball measure / used budget at the final K
};

// Penalty reported in gain files: g_value at the final K, with weighted
// kinds refreshed there.
double final_penalty(const Eigen::MatrixXd& K, slqr::Regularizer reg,
                     const slqr::BlockPartition& part) {
  if (reg.is_weighted()) reg = slqr::update_weights(K, reg, part);
  return slqr::g_value(K, reg, part);
}

SolveOutput solve_core(const slqr::Plant& plant, const SolverFlags& f) {
  const Eigen::MatrixXd K0 = slqr::care_gain(plant.A, plant.B1, plant.Q, plant.R);
  SolveOutput out;
  if (f.algo == "ista" || f.algo == "fista") {
    slqr::IstaConfig cfg;
    cfg.gamma = f.gamma;
    cfg.rho0 = f.rho0;
    cfg.alpha = f.alpha;
    cfg.tol = f.tol;
    if (f.max_iter > 0) cfg.max_iter = f.max_iter;
    cfg.max_backtracks = f.max_backtracks;
    cfg.regularizer = make_regularizer(f);
    cfg.strict_acceptance = !f.accept_on_stability;
    cfg.momentum_scale = f.momentum_scale;
    out.res = f.algo == "ista" ? slqr::ista_solve(plant, K0, cfg)
                               : slqr::fista_solve(plant, K0, cfg);
    out.G = final_penalty(out.res.k_final.K, cfg.regularizer, plant.partition);
  } else if (f.algo == "ispa") {
    if (!(f.radius > 0.0))
      throw CLI::ValidationError("--radius must be > 0 with --algo ispa");
    slqr::IspaConfig cfg;
    cfg.radius = make_ball(f);
    cfg.rho0 = f.ispa_rho0;
    cfg.alpha = f.ispa_alpha;
    cfg.armijo_c = f.armijo_c;
    cfg.tol = f.tol;
    if (f.max_iter > 0) cfg.max_iter = f.max_iter;
    cfg.max_backtracks = f.max_backtracks;
    out.res = slqr::ispa_solve(plant, K0, cfg);
    out.G = slqr::ball_measure(out.res.k_final.K, cfg.radius, plant.partition);
  } else if (f.algo == "admm") {
    slqr::AdmmConfig cfg;
    cfg.gamma = f.gamma;
    cfg.rho = f.admm_rho;
    cfg.eps_abs = f.eps_abs;
    cfg.eps_rel = f.eps_rel;
    if (f.max_iter > 0) cfg.max_iter = f.max_iter;
    if (f.inner_steps > 0) cfg.inner_steps = f.inner_steps;
    cfg.inner_tol = f.inner_tol;
    cfg.regularizer = make_regularizer(f);
    out.res = slqr::admm_solve(plant, K0, cfg);
    out.G = final_penalty(out.res.k_final.K, cfg.regularizer, plant.partition);
  } else {  // grasp
    if (f.budget < 1) throw CLI::ValidationError("--budget must be >= 1 with --algo grasp");
    slqr::GraspConfig cfg;
    cfg.s = f.budget;
    cfg.tol = f.tol;
    if (f.max_iter > 0) cfg.max_iter = f.max_iter;
    if (f.inner_steps > 0) cfg.inner_steps = f.inner_steps;
    cfg.exempt_diagonal = !f.prune_diagonal;
    cfg.block_mode = f.block_mode;
    out.res = slqr::grasp_solve(plant, K0, cfg);
    out.G = out.res.trace.entries.back().G;
  }
  return out;
}

json solver_config_json(const SolverFlags& f) {
  json j{{"algo", f.algo}, {"tol", f.tol}, {"max_iter", f.max_iter},
         {"max_backtracks", f.max_backtracks}};
  if (f.algo == "ista" || f.algo == "fista" || f.algo == "admm") {
    j["gamma"] = f.gamma;
    j["reg"] = f.reg;
    j["epsilon"] = f.epsilon;
  }
  if (f.algo == "ista" || f.algo == "fista") {
    j["rho0"] = f.rho0;
    j["alpha"] = f.alpha;
    j["strict_acceptance"] = !f.accept_on_stability;
    j["momentum_scale"] = f.momentum_scale;
  } else if (f.algo == "ispa") {
    j["ball"] = f.ball;
    j["radius"] = f.radius;
    j["rho0"] = f.ispa_rho0;
    j["alpha"] = f.ispa_alpha;
    j["armijo_c"] = f.armijo_c;
  } else if (f.algo == "admm") {
    j["rho"] = f.admm_rho;
    j["eps_abs"] = f.eps_abs;
    j["eps_rel"] = f.eps_rel;
    j["inner_steps"] = f.inner_steps;
    j["inner_tol"] = f.inner_tol;
  } else if (f.algo == "grasp") {
    j["budget"] = f.budget;
    j["block_mode"] = f.block_mode;
    j["exempt_diagonal"] = !f.prune_diagonal;
  }
  return j;
}

void attach_solver_flags(CLI::App* cmd, SolverFlags& f, bool with_algo) {
  if (with_algo)
    cmd->add_option("--algo", f.algo, "solver")
        ->check(CLI::IsMember({"ista", "fista", "ispa", "admm", "grasp"}))
        ->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "penalty weight")->capture_default_str();
  cmd->add_option("--reg", f.reg, "regularizer kind")
      ->check(CLI::IsMember({"l1", "wl1", "bl1", "wbl1"}))
      ->capture_default_str();
  cmd->add_option("--epsilon", f.epsilon, "reweighting epsilon")->capture_default_str();
  cmd->add_option("--rho0", f.rho0, "initial penalty scale (ista/fista)")
      ->capture_default_str();
  cmd->add_option("--alpha", f.alpha, "backtracking multiplier (ista/fista)")
      ->capture_default_str();
  cmd->add_option("--tol", f.tol, "iterate-change stopping tolerance")->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "iteration cap (0 = per-algorithm default)")
      ->capture_default_str();
  cmd->add_option("--max-backtracks", f.max_backtracks, "backtracking cap per iteration")
      ->capture_default_str();
  cmd->add_option("--momentum-scale", f.momentum_scale, "fista extrapolation scale")
      ->capture_default_str();
  cmd->add_flag("--accept-on-stability", f.accept_on_stability,
                "accept on stability alone (drop the surrogate test)");
  if (!with_algo) return;
  cmd->add_option("--ball", f.ball, "ispa ball kind")
      ->check(CLI::IsMember({"l0", "l1", "bl1"}))
      ->capture_default_str();
  cmd->add_option("--radius", f.radius, "ispa ball radius");
  cmd->add_option("--ispa-rho0", f.ispa_rho0, "initial ispa step size")
      ->capture_default_str();
  cmd->add_option("--ispa-alpha", f.ispa_alpha, "ispa step shrink factor")
      ->capture_default_str();
  cmd->add_option("--armijo-c", f.armijo_c, "ispa sufficient-decrease constant")
      ->capture_default_str();
  cmd->add_option("--rho", f.admm_rho, "admm penalty parameter")->capture_default_str();
  cmd->add_option("--eps-abs", f.eps_abs, "admm absolute tolerance")->capture_default_str();
  cmd->add_option("--eps-rel", f.eps_rel, "admm relative tolerance")->capture_default_str();
  cmd->add_option("--inner-steps", f.inner_steps,
                  "inner-loop step cap (0 = per-algorithm default)")
      ->capture_default_str();
  cmd->add_option("--inner-tol", f.inner_tol, "admm inner-loop tolerance")
      ->capture_default_str();
  cmd->add_option("--budget", f.budget, "grasp off-diagonal nonzero budget");
  cmd->add_flag("--block-mode", f.block_mode, "grasp prunes whole blocks");
  cmd->add_flag("--prune-diagonal", f.prune_diagonal,
                "let grasp prune diagonal blocks too");
}

struct RunRecord {
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json config;
  int exit_code = kOk;
  std::string manifest_path;
};

std::string status_name(slqr::SolveStatus s) {
  switch (s) {
    case slqr::SolveStatus::Converged: return "converged";
    case slqr::SolveStatus::MaxIterReached: return "max-iterations";
    default: return "stalled";
  }
}

void do_gen(int agents, const std::string& out, RunRecord& rec) {
  slqr::Plant plant = slqr::gen_multiagent(agents);
  slqr::save_plant(plant, out);
  std::cout << "wrote " << plant.name << " (n=" << plant.n() << ", m=" << plant.m()
            << ") to " << out << "\n";
  rec.outputs = {out};
  rec.config = json{{"command", "gen"}, {"agents", agents}, {"out", out}};
  rec.manifest_path = out;
}

void do_solve(const std::string& plant_path, const SolverFlags& flags, const std::string& out,
              std::string trace_path, RunRecord& rec) {
  slqr::Plant plant = slqr::load_plant(plant_path);
  SolveOutput so = solve_core(plant, flags);
  if (trace_path.empty()) trace_path = out + ".trace.csv";

  slqr::GainFile gf;
  gf.K = so.res.k_final.K;
  gf.J = so.res.k_final.J.value_or(slqr::cost_J(plant, so.res.k_final.K));
  gf.G = so.G;
  gf.gamma_or_radius = flags.algo == "ispa"    ? flags.radius
                       : flags.algo == "grasp" ? static_cast<double>(flags.budget)
                                               : flags.gamma;
  gf.algorithm = flags.algo;
  gf.iterations = so.res.trace.iterations();
  gf.converged = so.res.trace.converged();
  gf.abscissa = so.res.k_final.abscissa;
  gf.nnz = slqr::nnz(so.res.k_final.K);
  slqr::save_gain(gf, out);
  slqr::write_trace_csv(so.res.trace, trace_path);

  for (const std::string& w : so.res.trace.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << flags.algo << ": " << status_name(so.res.trace.status) << " after "
            << gf.iterations << " iterations, J=" << slqr::fmt17(gf.J) << ", nnz=" << gf.nnz
            << ", " << so.res.trace.counters.lyapunov_solves << " lyapunov solves\n";

  rec.inputs = {plant_path};
  rec.outputs = {out, trace_path};
  rec.config = solver_config_json(flags);
  rec.config["command"] = "solve";
  rec.config["plant"] = plant_path;
  rec.config["out"] = out;
  rec.config["trace"] = trace_path;
  rec.exit_code = gf.converged ? kOk : kNotConverged;
  rec.manifest_path = out;
}

void do_sweep(const std::string& plant_path, const SolverFlags& flags,
              const std::string& param, const std::vector<double>& values, int jobs,
              const std::string& out, RunRecord& rec) {
  const bool penalized =
      flags.algo == "ista" || flags.algo == "fista" || flags.algo == "admm";
  if (penalized && param != "gamma")
    throw CLI::ValidationError("--param must be gamma for " + flags.algo);
  if (!penalized && param != "radius")
    throw CLI::ValidationError("--param must be radius for " + flags.algo);
  if (values.empty()) throw CLI::ValidationError("--values must be nonempty");
  if (jobs < 1) throw CLI::ValidationError("--jobs must be >= 1");

  slqr::Plant plant = slqr::load_plant(plant_path);
  std::vector<slqr::SweepRow> rows(values.size());
  std::vector<bool> converged(values.size(), false);

  auto run_point = [&](std::size_t i) {
    SolverFlags f = flags;
    if (param == "gamma")
      f.gamma = values[i];
    else if (f.algo == "grasp")
      f.budget = static_cast<long>(std::llround(values[i]));
    else
      f.radius = values[i];
    SolveOutput so = solve_core(plant, f);
    slqr::SweepRow row;
    row.value = values[i];
    row.J = so.res.k_final.J.value_or(0.0);
    row.G = so.G;
    row.nnz = slqr::nnz(so.res.k_final.K);
    row.iters = so.res.trace.iterations();
    row.lyap_solves = so.res.trace.counters.lyapunov_solves;
    rows[i] = row;
    converged[i] = so.res.trace.converged();
  };

  if (jobs == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) run_point(i);
  } else {
    // Round-robin index assignment; rows land in their slots, so the table is
    // identical to the serial one.
    std::vector<std::future<void>> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t i = static_cast<std::size_t>(w); i < values.size();
             i += static_cast<std::size_t>(jobs))
          run_point(i);
      }));
    }
    for (auto& fut : workers) fut.get();
  }

  slqr::write_sweep_csv(rows, out);
  const bool all_converged =
      std::all_of(converged.begin(), converged.end(), [](bool b) { return b; });
  std::cout << "swept " << param << " over " << values.size() << " points to " << out
            << (all_converged ? "" : " (some points did not converge)") << "\n";

  rec.inputs = {plant_path};
  rec.outputs = {out};
  rec.config = solver_config_json(flags);
  rec.config["command"] = "sweep";
  rec.config["plant"] = plant_path;
  rec.config["param"] = param;
  rec.config["values"] = values;
  rec.config["jobs"] = jobs;
  rec.config["out"] = out;
  rec.exit_code = all_converged ? kOk : kNotConverged;
  rec.manifest_path = out;
}

void do_dataset(const std::string& plant_path, int count, double sigma, std::uint64_t seed,
                const std::string& targets, const SolverFlags& flags, int jobs,
                const std::string& out, RunRecord& rec) {
  if (jobs < 1) throw CLI::ValidationError("--jobs must be >= 1");
  slqr::DatasetSpec spec;
  spec.base = slqr::load_plant(plant_path);
  spec.count = count;
  spec.noise_sigma = sigma;
  spec.seed = seed;
  spec.targets = targets == "a" ? slqr::PerturbTargets::ANonzeros
                                : slqr::PerturbTargets::AB1B2Nonzeros;

  slqr::IstaConfig cfg;
  cfg.gamma = flags.gamma;
  cfg.rho0 = flags.rho0;
  cfg.alpha = flags.alpha;
  cfg.tol = flags.tol;
  if (flags.max_iter > 0) cfg.max_iter = flags.max_iter;
  cfg.max_backtracks = flags.max_backtracks;
  cfg.regularizer = make_regularizer(flags);
  cfg.strict_acceptance = !flags.accept_on_stability;

  slqr::Dataset ds = slqr::gen_dataset(spec, cfg, jobs);
  slqr::save_dataset(ds, out);
  std::cout << "wrote " << ds.examples.size() << " examples (" << ds.rejections
            << " rejected draws) to " << out << "\n";

  rec.inputs = {plant_path};
  rec.outputs = {out};
  rec.config = solver_config_json(flags);
  rec.config["command"] = "dataset";
  rec.config["plant"] = plant_path;
  rec.config["count"] = count;
  rec.config["sigma"] = sigma;
  rec.config["seed"] = seed;
  rec.config["targets"] = targets;
  rec.config["jobs"] = jobs;
  rec.config["out"] = out;
  rec.manifest_path = out;
}

slqr::UnrolledNet truncated(const slqr::UnrolledNet& net, int depth) {
  slqr::UnrolledNet prefix = net;
  prefix.layers.resize(static_cast<std::size_t>(depth));
  return prefix;
}

void do_tune(const std::string& dataset_path, int layers, const std::string& op,
             const slqr::TrainOpts& opts, int train_count, const std::string& out,
             RunRecord& rec) {
  slqr::Dataset ds = slqr::load_dataset(dataset_path);
  if (train_count < 1 || train_count > static_cast<int>(ds.examples.size()))
    throw slqr::InputError("tune: --train-count must be in [1, dataset size]");
  std::vector<slqr::LabeledExample> slice(ds.examples.begin(),
                                          ds.examples.begin() + train_count);
  std::vector<slqr::PreparedExample> train_set = slqr::prepare_examples(slice);

  slqr::UnrolledNet init = slqr::UnrolledNet::untuned(
      layers, op == "block" ? slqr::SparsityOp::Block : slqr::SparsityOp::Elementwise,
      ds.examples.front().plant.partition);
  slqr::TrainResult res = slqr::train(init, train_set, opts);
  slqr::save_net(res.net, out);
  std::cout << "train loss " << slqr::fmt17(res.initial_loss) << " -> "
            << slqr::fmt17(res.final_loss) << " (" << res.accepted_updates
            << " accepted updates)\n";
  if (!res.improved) std::cout << "no improving update was found; kept the initial net\n";

  rec.inputs = {dataset_path};
  rec.outputs = {out};
  rec.config = json{{"command", "tune"},
                    {"dataset", dataset_path},
                    {"layers", layers},
                    {"op", op},
                    {"epochs", opts.epochs},
                    {"step", opts.step},
                    {"perturb", opts.spsa_perturb},
                    {"seed", opts.seed},
                    {"minibatch", opts.minibatch},
                    {"exact_gradient", opts.exact_gradient},
                    {"train_count", train_count},
                    {"out", out}};
  rec.exit_code = res.improved ? kOk : kNotConverged;
  rec.manifest_path = out;
}

void do_eval(const std::string& dataset_path, const std::string& net_path,
             const std::vector<int>& depths, int train_count, const std::string& out,
             RunRecord& rec) {
  if (depths.empty()) throw CLI::ValidationError("--depths must be nonempty");
  slqr::Dataset ds = slqr::load_dataset(dataset_path);
  if (train_count < 0 || train_count >= static_cast<int>(ds.examples.size()))
    throw slqr::InputError("eval: --train-count leaves no held-out examples");
  std::vector<slqr::LabeledExample> slice(ds.examples.begin() + train_count,
                                          ds.examples.end());
  std::vector<slqr::PreparedExample> test_set = slqr::prepare_examples(slice);

  std::optional<slqr::UnrolledNet> tuned;
  if (!net_path.empty()) {
    tuned = slqr::load_net(net_path);
    for (int d : depths)
      if (d > tuned->depth())
        throw slqr::InputError("eval: depth " + std::to_string(d) +
                               " exceeds the net's layer count");
  }

  std::vector<Eigen::MatrixXd> references;
  references.reserve(test_set.size());
  for (const slqr::PreparedExample& ex : test_set) references.push_back(ex.K_star);

  auto nmse_of = [&](const slqr::UnrolledNet& net) {
    std::vector<Eigen::MatrixXd> estimates;
    estimates.reserve(test_set.size());
    for (const slqr::PreparedExample& ex : test_set)
      estimates.push_back(slqr::net_forward(net, ex.plant, ex.K0).K);
    return slqr::nmse(estimates, references);
  };

  std::ostringstream table;
  table << (tuned ? "depth,nmse_untuned,nmse_tuned\n" : "depth,nmse_untuned\n");
  for (int d : depths) {
    slqr::UnrolledNet untuned = slqr::UnrolledNet::untuned(
        d, tuned ? tuned->op : slqr::SparsityOp::Elementwise,
        test_set.front().plant.partition);
    table << d << ',' << slqr::fmt17(nmse_of(untuned));
    if (tuned) table << ',' << slqr::fmt17(nmse_of(truncated(*tuned, d)));
    table << '\n';
  }
  {
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw slqr::IoError("cannot open " + out + " for writing");
    f << table.str();
  }
  std::cout << "wrote nmse table (" << depths.size() << " depths, " << test_set.size()
            << " held-out examples) to " << out << "\n";

  rec.inputs = {dataset_path};
  if (!net_path.empty()) rec.inputs.push_back(net_path);
  rec.config = json{{"command", "eval"},     {"dataset", dataset_path},
                    {"net", net_path},       {"depths", depths},
                    {"train_count", train_count}, {"out", out}};
  rec.outputs = {out};
  rec.manifest_path = out;
}

int do_replay(const std::string& manifest_path) {
  slqr::RunManifest m = slqr::load_manifest(manifest_path);
  if (!m.argv.empty() && m.argv.front() == "replay")
    throw slqr::InputError("replay: manifest records a replay run");
  for (const auto& [path, hash] : m.inputs) {
    const std::string now = slqr::fnv1a64_file(path);
    if (now != hash)
      throw slqr::InputError("replay: input " + path + " hash " + now +
                             " does not match recorded " + hash);
  }
  const int code = run_cli(m.argv);
  bool reproduced = true;
  for (const auto& [path, hash] : m.outputs) {
    const std::string now = slqr::fnv1a64_file(path);
    if (now != hash) {
      std::cerr << "replay: output " << path << " hash " << now
                << " does not match recorded " << hash << "\n";
      reproduced = false;
    }
  }
  if (!reproduced) return kNumerical;
  std::cout << "replay: " << m.outputs.size() << " outputs reproduced bit-identically\n";
  return code;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"sparse feedback gain design toolkit"};
  app.name("slqr");
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a multi-agent benchmark plant");
  int agents = 5;
  std::string gen_out = "plant.json";
  gen->add_option("--agents", agents, "number of agents")
      ->required()
      ->check(CLI::Range(1, 1000));
  gen->add_option("--out", gen_out, "plant file path")->capture_default_str();

  // solve
  auto* solve = app.add_subcommand("solve", "run one solver on a plant file");
  SolverFlags sv;
  std::string sv_plant, sv_out = "gain.json", sv_trace;
  solve->add_option("--plant", sv_plant, "plant file")->required();
  solve->add_option("--out", sv_out, "gain file path")->capture_default_str();
  solve->add_option("--trace", sv_trace, "trace csv path (default <out>.trace.csv)");
  attach_solver_flags(solve, sv, /*with_algo=*/true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a solver across a parameter range");
  SolverFlags sw;
  std::string sw_plant, sw_out = "sweep.csv", sw_param = "gamma";
  std::vector<double> sw_values;
  int sw_jobs = 1;
  sweep->add_option("--plant", sw_plant, "plant file")->required();
  sweep->add_option("--param", sw_param, "swept parameter")
      ->check(CLI::IsMember({"gamma", "radius"}))
      ->capture_default_str();
  sweep->add_option("--values", sw_values, "comma-separated range values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--jobs", sw_jobs, "parallel workers")->capture_default_str();
  sweep->add_option("--out", sw_out, "table csv path")->capture_default_str();
  attach_solver_flags(sweep, sw, /*with_algo=*/true);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "generate a perturbed-plant dataset");
  SolverFlags dsf;
  std::string ds_plant, ds_out = "dataset.json", ds_targets = "a";
  int ds_count = 120, ds_jobs = 1;
  double ds_sigma = 1.0;
  std::uint64_t ds_seed = 0;
  dataset->add_option("--plant", ds_plant, "base plant file")->required();
  dataset->add_option("--count", ds_count, "number of examples")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  dataset->add_option("--sigma", ds_sigma, "perturbation standard deviation")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  dataset->add_option("--seed", ds_seed, "rng seed")->capture_default_str();
  dataset->add_option("--targets", ds_targets, "which nonzeros to perturb")
      ->check(CLI::IsMember({"a", "ab"}))
      ->capture_default_str();
  dataset->add_option("--jobs", ds_jobs, "parallel workers")->capture_default_str();
  dataset->add_option("--out", ds_out, "dataset file path")->capture_default_str();
  attach_solver_flags(dataset, dsf, /*with_algo=*/false);

  // tune
  auto* tune = app.add_subcommand("tune", "train the unrolled net on a dataset");
  std::string tn_dataset, tn_out = "net.json", tn_op = "elementwise";
  int tn_layers = 10, tn_train = 100;
  slqr::TrainOpts tn_opts;
  tune->add_option("--dataset", tn_dataset, "dataset file")->required();
  tune->add_option("--layers", tn_layers, "net depth")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  tune->add_option("--op", tn_op, "shrinkage operator")
      ->check(CLI::IsMember({"elementwise", "block"}))
      ->capture_default_str();
  tune->add_option("--epochs", tn_opts.epochs, "training epochs")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  tune->add_option("--step", tn_opts.step, "update step in normalized space")
      ->capture_default_str();
  tune->add_option("--perturb", tn_opts.spsa_perturb, "spsa probe radius")
      ->capture_default_str();
  tune->add_option("--seed", tn_opts.seed, "training rng seed")->capture_default_str();
  tune->add_option("--minibatch", tn_opts.minibatch, "examples per gradient estimate")
      ->capture_default_str();
  tune->add_flag("--exact-gradient", tn_opts.exact_gradient,
                 "full central-difference gradient (depth <= 10)");
  tune->add_option("--train-count", tn_train, "training examples (prefix of the dataset)")
      ->capture_default_str();
  tune->add_option("--out", tn_out, "net file path")->capture_default_str();

  // eval
  auto* eval = app.add_subcommand("eval", "nmse-vs-depth table on held-out examples");
  std::string ev_dataset, ev_net, ev_out = "nmse.csv";
  std::vector<int> ev_depths{10, 20, 30};
  int ev_train = 100;
  eval->add_option("--dataset", ev_dataset, "dataset file")->required();
  eval->add_option("--net", ev_net, "tuned net file (optional)");
  eval->add_option("--depths", ev_depths, "comma-separated depths")->delimiter(',');
  eval->add_option("--train-count", ev_train, "examples reserved for training")
      ->capture_default_str();
  eval->add_option("--out", ev_out, "table csv path")->capture_default_str();

  // replay
  auto* replay = app.add_subcommand("replay", "re-run a recorded manifest and verify");
  std::string rp_manifest;
  replay->add_option("manifest", rp_manifest, "manifest file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  const auto started = std::chrono::steady_clock::now();
  RunRecord rec;
  try {
    if (app.got_subcommand(gen)) {
      do_gen(agents, gen_out, rec);
    } else if (app.got_subcommand(solve)) {
      do_solve(sv_plant, sv, sv_out, sv_trace, rec);
    } else if (app.got_subcommand(sweep)) {
      do_sweep(sw_plant, sw, sw_param, sw_values, sw_jobs, sw_out, rec);
    } else if (app.got_subcommand(dataset)) {
      do_dataset(ds_plant, ds_count, ds_sigma, ds_seed, ds_targets, dsf, ds_jobs, ds_out,
                 rec);
    } else if (app.got_subcommand(tune)) {
      do_tune(tn_dataset, tn_layers, tn_op, tn_opts, tn_train, tn_out, rec);
    } else if (app.got_subcommand(eval)) {
      do_eval(ev_dataset, ev_net, ev_depths, ev_train, ev_out, rec);
    } else {
      return do_replay(rp_manifest);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  slqr::RunManifest manifest;
  manifest.tool_version = kToolVersion;
  manifest.argv = args;
  manifest.config = rec.config;
  for (const std::string& p : rec.inputs) manifest.inputs.emplace_back(p, slqr::fnv1a64_file(p));
  for (const std::string& p : rec.outputs)
    manifest.outputs.emplace_back(p, slqr::fnv1a64_file(p));
  manifest.wall_time_s = wall;
  manifest.exit_code = rec.exit_code;
  slqr::save_manifest(manifest, rec.manifest_path + ".manifest.json");
  return rec.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(args);
  } catch (const slqr::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kBadInput;
  } catch (const slqr::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  }
}
