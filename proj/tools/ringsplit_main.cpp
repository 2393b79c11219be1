#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "ringsplit/problem_json.hpp"
#include "ringsplit/problems.hpp"
#include "ringsplit/ringsim.hpp"
#include "ringsplit/rng.hpp"
#include "ringsplit/splitting.hpp"

namespace {

using namespace ringsplit;

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct SolveOptions {
  std::string problem_path;
  std::string builtin;
  std::uint64_t seed = 1;
  int n = 4;
  int dim = 5;
  std::string algo;  // fb | frb | mixed; empty keeps the problem's mode
  double lambda = 0.0;
  double gamma = 0.0;
  double tol = 1e-18;
  long max_iters = 1000000;
  long check_period = 1;
  std::string exec = "sequential";
  std::string trace_path;
  std::string log_path;
  std::string out_path;
};

Mode mode_from_algo(const std::string& algo) {
  if (algo == "fb") return Mode::Cocoercive;
  if (algo == "frb") return Mode::Lipschitz;
  if (algo == "mixed") return Mode::Mixed;
  throw Error(Errc::Config, "unknown algo '" + algo + "' (expected fb, frb or mixed)");
}

ProblemSpec load_spec(const SolveOptions& opt) {
  if (!opt.problem_path.empty() && !opt.builtin.empty())
    throw Error(Errc::Config, "give either --problem or --builtin, not both");
  ProblemSpec spec;
  if (!opt.problem_path.empty()) {
    spec = load_problem_file(opt.problem_path);
  } else if (!opt.builtin.empty()) {
    if (opt.builtin == "quadratic_consensus") {
      spec = make_quadratic_consensus(opt.n, opt.dim, opt.seed);
    } else if (opt.builtin == "rotation") {
      spec = make_rotation_counterexample();
    } else if (opt.builtin == "box_feasibility") {
      const double inf = std::numeric_limits<double>::infinity();
      std::vector<IntervalBox> boxes;
      boxes.push_back({Vector::Constant(1, 0.0), Vector::Constant(1, 2.0)});
      boxes.push_back({Vector::Constant(1, 1.0), Vector::Constant(1, 3.0)});
      boxes.push_back({Vector::Constant(1, -inf), Vector::Constant(1, inf)});
      spec = make_box_feasibility(boxes);
    } else if (opt.builtin == "bilinear_saddle") {
      Rng rng(opt.seed);
      spec = make_bilinear_saddle(rng.matrix(2, 2, -1.0, 1.0));
    } else {
      throw Error(Errc::Config, "unknown builtin '" + opt.builtin +
                                    "' (quadratic_consensus, rotation, box_feasibility, "
                                    "bilinear_saddle)");
    }
  } else {
    throw Error(Errc::Config, "a problem is required: --problem FILE or --builtin NAME");
  }
  if (!opt.algo.empty()) {
    spec.instance.mode = mode_from_algo(opt.algo);
    validate_instance(spec.instance);  // reject arity/regularity mismatches up front
  }
  return spec;
}

StepParams pick_params(const ProblemSpec& spec, const SolveOptions& opt) {
  const StepParams defaults = default_params(spec.instance);
  const double lambda = opt.lambda > 0 ? opt.lambda : defaults.lambda;
  const double gamma = opt.gamma > 0 ? opt.gamma : defaults.gamma;
  return make_params(spec.instance, lambda, gamma);
}

void write_trace_csv(const std::string& path, const Trace& trace) {
  std::ofstream os(path);
  if (!os) throw Error(Errc::Config, "cannot write trace file '" + path + "'");
  os << "k,residual_sq,consensus_gap,dual_max_dist\n";
  const bool duals = trace.has_duals && !trace.rows.empty() &&
                     !trace.rows.front().dual_values.empty();
  const std::vector<Vector>* final_duals = duals ? &trace.rows.back().dual_values : nullptr;
  for (const TraceRow& row : trace.rows) {
    double dual_max = 0.0;
    if (duals)
      for (std::size_t j = 0; j < row.dual_values.size(); ++j)
        dual_max = std::max(dual_max, step::diff_norm(row.dual_values[j], (*final_duals)[j]));
    os << row.k << ',' << fmt17(row.residual_sq) << ',' << fmt17(row.consensus_gap) << ','
       << fmt17(dual_max) << '\n';
  }
}

void write_final_state(const std::string& path, const ProblemSpec& spec, const SolveResult& res) {
  nlohmann::ordered_json j;
  j["status"] = res.status == SolveStatus::Converged ? "converged" : "max_iters";
  j["iterations"] = res.iterations;
  j["residual_sq"] = res.trace.rows.empty() ? 0.0 : res.trace.rows.back().residual_sq;
  nlohmann::ordered_json x1 = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < res.x.front().size(); ++i) x1.push_back(res.x.front()[i]);
  j["x1"] = std::move(x1);
  nlohmann::ordered_json z = nlohmann::ordered_json::array();
  for (const Vector& zi : res.z) {
    nlohmann::ordered_json block = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < zi.size(); ++i) block.push_back(zi[i]);
    z.push_back(std::move(block));
  }
  j["z"] = std::move(z);
  if (spec.known_solution) {
    nlohmann::ordered_json ks = nlohmann::ordered_json::array();
    for (Eigen::Index i = 0; i < spec.known_solution->size(); ++i)
      ks.push_back((*spec.known_solution)[i]);
    j["known_solution"] = std::move(ks);
    j["solution_error"] = step::diff_norm(res.x.front(), *spec.known_solution);
  }
  std::ofstream os(path);
  if (!os) throw Error(Errc::Config, "cannot write state file '" + path + "'");
  os << j.dump(2) << '\n';
}

void print_summary(const ProblemSpec& spec, const StepParams& sp, const SolveResult& res) {
  std::cout << "problem:    " << spec.name << " (n=" << spec.instance.n
            << ", d=" << spec.instance.dim << ", mode=" << mode_name(spec.instance.mode) << ")\n";
  std::cout << "params:     lambda=" << fmt17(sp.lambda) << " gamma=" << fmt17(sp.gamma)
            << " L=" << fmt17(sp.lipschitz) << "\n";
  std::cout << "status:     "
            << (res.status == SolveStatus::Converged ? "converged" : "max-iters") << "\n";
  std::cout << "iterations: " << res.iterations << "\n";
  if (!res.trace.rows.empty())
    std::cout << "residual^2: " << fmt17(res.trace.rows.back().residual_sq) << "\n";
  const Vector& x1 = res.x.front();
  std::cout << "solution:  ";
  const Eigen::Index shown = std::min<Eigen::Index>(8, x1.size());
  for (Eigen::Index i = 0; i < shown; ++i) std::cout << ' ' << fmt17(x1[i]);
  if (shown < x1.size()) std::cout << " ...";
  std::cout << "\n";
  if (spec.known_solution)
    std::cout << "oracle err: " << fmt17(step::diff_norm(x1, *spec.known_solution)) << "\n";
}

int run_solve(const SolveOptions& opt) {
  const ProblemSpec spec = load_spec(opt);
  const StepParams sp = pick_params(spec, opt);
  StopRule stop;
  stop.tol_residual_sq = opt.tol;
  stop.max_iters = opt.max_iters;
  stop.check_period = opt.check_period;
  stop.record_duals = true;
  const std::vector<Vector> z0 = zero_governing(spec.instance);

  SolveResult result;
  if (opt.exec == "sequential") {
    if (!opt.log_path.empty())
      std::cerr << "note: --log-messages applies to --exec ring only; ignoring\n";
    result = iterate(spec.instance, sp, z0, stop);
  } else if (opt.exec == "ring") {
    RingNetwork net = spawn_ring(spec.instance, sp, z0, !opt.log_path.empty());
    RingRunReport report = net.run_until_residual(stop);
    if (!opt.log_path.empty()) {
      std::ofstream os(opt.log_path);
      if (!os) throw Error(Errc::Config, "cannot write message log '" + opt.log_path + "'");
      write_message_log(os, net.log());
    }
    result.z = std::move(report.z);
    result.x = std::move(report.x);
    result.trace = std::move(report.trace);
    result.status = report.status == RingStatus::Converged ? SolveStatus::Converged
                                                           : SolveStatus::MaxIters;
    result.iterations = report.rounds;
  } else {
    throw Error(Errc::Config, "unknown exec '" + opt.exec + "' (sequential or ring)");
  }

  if (!opt.trace_path.empty()) write_trace_csv(opt.trace_path, result.trace);
  if (!opt.out_path.empty()) write_final_state(opt.out_path, spec, result);
  print_summary(spec, sp, result);
  return result.status == SolveStatus::Converged ? 0 : 2;
}

struct ValidateOptions {
  std::string problem_path;
  std::string builtin;
  std::uint64_t seed = 1;
  int n = 0;
  int dim = 5;
  double lipschitz = -1.0;
  std::string algo = "fb";
  double lambda = 0.0;
  double gamma = 0.0;
};

int run_validate(const ValidateOptions& opt) {
  int n = opt.n;
  Mode mode = mode_from_algo(opt.algo);
  double lipschitz = opt.lipschitz;
  if (!opt.problem_path.empty() || !opt.builtin.empty()) {
    SolveOptions tmp;
    tmp.problem_path = opt.problem_path;
    tmp.builtin = opt.builtin;
    tmp.seed = opt.seed;
    tmp.n = opt.n > 0 ? opt.n : 4;
    tmp.dim = opt.dim;
    const ProblemSpec spec = load_spec(tmp);
    n = spec.instance.n;
    mode = spec.instance.mode;
    lipschitz = max_lipschitz(spec.instance);
  }
  if (n < 2 || lipschitz < 0)
    throw Error(Errc::Config, "validate needs a problem or explicit --n and --L");

  // Fill unspecified step sizes with the defaults for this configuration.
  double lambda = opt.lambda;
  double gamma = opt.gamma;
  if (lambda <= 0) {
    if (lipschitz == 0.0)
      lambda = 1.0;
    else if (mode == Mode::Cocoercive)
      lambda = (n == 2 ? 4.0 : 2.0) / lipschitz / 2.0;
    else
      lambda = 1.0 / (2.0 * lipschitz) / 2.0;
  }
  const ParamCheck probe = validate_params(n, mode, lipschitz, lambda, 1e-9);
  if (gamma <= 0) gamma = probe.gamma_max > 0 ? 0.9 * probe.gamma_max : 0.9;

  const ParamCheck chk = validate_params(n, mode, lipschitz, lambda, gamma);
  std::cout << "n=" << n << " mode=" << mode_name(mode) << " L=" << fmt17(lipschitz)
            << " lambda=" << fmt17(lambda) << " gamma=" << fmt17(gamma) << "\n";
  std::cout << "bounds: lambda in (0, " << fmt17(chk.lambda_max) << "), gamma in (0, "
            << fmt17(chk.gamma_max) << ")\n";
  if (chk.ok) {
    std::cout << "accept\n";
    return 0;
  }
  std::cout << "reject: " << chk.reason << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Splitting solver for sums of monotone operators on ring networks"};
  app.require_subcommand(1);

  SolveOptions solve_opt;
  CLI::App* solve = app.add_subcommand("solve", "run a sequential or ring-simulated solve");
  solve->add_option("--problem", solve_opt.problem_path, "problem JSON file");
  solve->add_option("--builtin", solve_opt.builtin,
                    "builtin problem: quadratic_consensus, rotation, box_feasibility, "
                    "bilinear_saddle");
  solve->add_option("--seed", solve_opt.seed, "seed for builtin problems");
  solve->add_option("--n", solve_opt.n, "operator count for builtin problems");
  solve->add_option("--dim", solve_opt.dim, "dimension for builtin problems");
  solve->add_option("--algo", solve_opt.algo, "fb | frb | mixed (default: the problem's mode)");
  solve->add_option("--lambda", solve_opt.lambda, "resolvent step size");
  solve->add_option("--gamma", solve_opt.gamma, "governing update step size");
  solve->add_option("--tol", solve_opt.tol, "squared-residual stopping threshold");
  solve->add_option("--max-iters", solve_opt.max_iters, "iteration cap");
  solve->add_option("--check-period", solve_opt.check_period, "residual check period");
  solve->add_option("--exec", solve_opt.exec, "sequential | ring");
  solve->add_option("--trace", solve_opt.trace_path, "trace CSV output path");
  solve->add_option("--log-messages", solve_opt.log_path, "ring message log (JSON lines)");
  solve->add_option("--out", solve_opt.out_path, "final state JSON output path");

  ValidateOptions val_opt;
  CLI::App* validate = app.add_subcommand("validate", "check step sizes against the mode bounds");
  validate->add_option("--problem", val_opt.problem_path, "problem JSON file");
  validate->add_option("--builtin", val_opt.builtin, "builtin problem name");
  validate->add_option("--seed", val_opt.seed, "seed for builtin problems");
  validate->add_option("--n", val_opt.n, "operator count");
  validate->add_option("--dim", val_opt.dim, "dimension for builtin problems");
  validate->add_option("--L", val_opt.lipschitz, "Lipschitz constant");
  validate->add_option("--algo", val_opt.algo, "fb | frb | mixed");
  validate->add_option("--lambda", val_opt.lambda, "resolvent step size");
  validate->add_option("--gamma", val_opt.gamma, "governing update step size");

  CLI11_PARSE(app, argc, argv);

  if (const char* env_seed = std::getenv("RINGSPLIT_SEED")) {
    try {
      const std::uint64_t s = std::stoull(env_seed);
      solve_opt.seed = s;
      val_opt.seed = s;
    } catch (const std::exception&) {
      std::cerr << "error: RINGSPLIT_SEED is not a valid unsigned integer\n";
      return 1;
    }
  }

  try {
    if (solve->parsed()) return run_solve(solve_opt);
    if (validate->parsed()) return run_validate(val_opt);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
