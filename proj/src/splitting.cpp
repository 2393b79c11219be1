#include "ringsplit/splitting.hpp"

#include <chrono>
#include <limits>
#include <sstream>

namespace ringsplit {

namespace {

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

void check_governing(const ProblemInstance& p, const std::vector<Vector>& z, const char* what) {
  if (z.size() != static_cast<std::size_t>(p.n - 1))
    throw Error(Errc::DimensionMismatch, std::string(what) + " must have n-1 blocks, got " +
                                             std::to_string(z.size()));
  for (const Vector& zi : z) {
    require_dim(zi, p.dim, what);
    require_finite(zi, what);
  }
}

// B_j(x) for 1-based forward index j; identically zero past the instance's
// arity (the Lipschitz problem has no B_{n-1}).
Vector forward_value(const ProblemInstance& p, int j, const Vector& x) {
  if (j >= 1 && static_cast<std::size_t>(j) <= p.forwards.size())
    return forward_eval(p.forwards[j - 1], x);
  return Vector::Zero(p.dim);
}

}  // namespace

const char* mode_name(Mode mode) {
  switch (mode) {
    case Mode::Cocoercive: return "cocoercive";
    case Mode::Lipschitz: return "lipschitz";
    case Mode::Mixed: return "mixed";
  }
  return "unknown";
}

std::size_t forward_arity(Mode mode, int n) {
  return static_cast<std::size_t>(mode == Mode::Lipschitz ? n - 2 : n - 1);
}

void validate_instance(const ProblemInstance& p) {
  if (p.n < 2) throw Error(Errc::InvalidProblem, "instance needs at least 2 operators");
  if (p.mode != Mode::Cocoercive && p.n < 3)
    throw Error(Errc::InvalidProblem,
                std::string(mode_name(p.mode)) + " mode requires n >= 3, got n = " +
                    std::to_string(p.n));
  if (p.dim < 1) throw Error(Errc::InvalidProblem, "instance dimension must be positive");
  if (p.resolvents.size() != static_cast<std::size_t>(p.n))
    throw Error(Errc::InvalidProblem, "expected " + std::to_string(p.n) + " resolvents, got " +
                                          std::to_string(p.resolvents.size()));
  const std::size_t m = forward_arity(p.mode, p.n);
  if (p.forwards.size() != m)
    throw Error(Errc::InvalidProblem, std::string(mode_name(p.mode)) + " mode with n = " +
                                          std::to_string(p.n) + " expects " + std::to_string(m) +
                                          " forward operators, got " +
                                          std::to_string(p.forwards.size()));
  for (const ResolventOp& op : p.resolvents)
    if (op.dim != p.dim) throw Error(Errc::DimensionMismatch, "resolvent dimension mismatch");
  for (std::size_t j = 0; j < p.forwards.size(); ++j) {
    const ForwardOp& op = p.forwards[j];
    if (op.dim != p.dim) throw Error(Errc::DimensionMismatch, "forward operator dimension mismatch");
    if (p.mode == Mode::Cocoercive && op.regularity != Regularity::Cocoercive)
      throw Error(Errc::InvalidProblem,
                  "cocoercive mode requires every forward operator to be declared cocoercive");
    if (p.mode == Mode::Lipschitz && op.regularity != Regularity::LipschitzMonotone)
      throw Error(Errc::InvalidProblem,
                  "lipschitz mode requires every forward operator to be declared Lipschitz monotone");
    if (p.mode == Mode::Mixed && j + 1 == p.forwards.size() &&
        op.regularity != Regularity::Cocoercive)
      throw Error(Errc::InvalidProblem,
                  "mixed mode requires the last forward operator to be declared cocoercive");
  }
}

double max_lipschitz(const ProblemInstance& p) {
  double L = 0.0;
  for (const ForwardOp& op : p.forwards) L = std::max(L, op.lipschitz);
  return L;
}

ParamCheck validate_params(int n, Mode mode, double lipschitz, double lambda, double gamma) {
  ParamCheck out;
  const double inf = std::numeric_limits<double>::infinity();
  if (n < 2) {
    out.reason = "n must be at least 2";
    return out;
  }
  if (mode != Mode::Cocoercive && n < 3) {
    out.reason = std::string(mode_name(mode)) + " mode requires n >= 3";
    return out;
  }
  if (!(lipschitz >= 0) || !std::isfinite(lipschitz)) {
    out.reason = "Lipschitz constant must be finite and nonnegative";
    return out;
  }

  const bool coco = mode == Mode::Cocoercive;
  if (lipschitz == 0.0)
    out.lambda_max = inf;
  else if (coco)
    out.lambda_max = (n == 2 ? 4.0 : 2.0) / lipschitz;
  else
    out.lambda_max = 1.0 / (2.0 * lipschitz);

  if (!(lambda > 0) || !std::isfinite(lambda)) {
    out.reason = "lambda must be positive and finite";
    return out;
  }
  if (lambda >= out.lambda_max) {
    out.reason = "lambda must lie in the open interval (0, " + fmt(out.lambda_max) +
                 "); got " + fmt(lambda);
    return out;
  }

  out.gamma_max = coco ? (n == 2 ? 2.0 : 1.0) - lambda * lipschitz / 2.0
                       : 1.0 - 2.0 * lambda * lipschitz;
  if (!(gamma > 0) || !std::isfinite(gamma) || gamma >= out.gamma_max) {
    out.reason = "gamma must lie in the open interval (0, " + fmt(out.gamma_max) + "); got " +
                 fmt(gamma);
    return out;
  }
  out.ok = true;
  return out;
}

StepParams make_params(const ProblemInstance& p, double lambda, double gamma) {
  validate_instance(p);
  const double L = max_lipschitz(p);
  const ParamCheck chk = validate_params(p.n, p.mode, L, lambda, gamma);
  if (!chk.ok) throw Error(Errc::InvalidParams, chk.reason);
  return {lambda, gamma, L, p.mode};
}

StepParams default_params(const ProblemInstance& p) {
  validate_instance(p);
  const double L = max_lipschitz(p);
  if (L == 0.0) return make_params(p, 1.0, 0.9);
  double lambda_max;
  if (p.mode == Mode::Cocoercive)
    lambda_max = (p.n == 2 ? 4.0 : 2.0) / L;
  else
    lambda_max = 1.0 / (2.0 * L);
  const double lambda = lambda_max / 2.0;
  const double gamma_max = p.mode == Mode::Cocoercive
                               ? (p.n == 2 ? 2.0 : 1.0) - lambda * L / 2.0
                               : 1.0 - 2.0 * lambda * L;
  return make_params(p, lambda, 0.9 * gamma_max);
}

// ---- sweeps ----

namespace {

void check_sweep_inputs(const ProblemInstance& p, const StepParams& sp,
                        const std::vector<Vector>& z, Mode expected) {
  if (p.mode != expected)
    throw Error(Errc::InvalidParams, std::string("sweep called for ") + mode_name(expected) +
                                         " mode on a " + mode_name(p.mode) + " instance");
  if (sp.mode != p.mode)
    throw Error(Errc::InvalidParams, "step parameters were made for a different mode");
  check_governing(p, z, "governing variables");
}

}  // namespace

SweepResult sweep_cocoercive(const ProblemInstance& p, const StepParams& sp,
                             const std::vector<Vector>& z) {
  check_sweep_inputs(p, sp, z, Mode::Cocoercive);
  const double lambda = sp.lambda;
  const int n = p.n;
  SweepResult r;
  r.x.resize(n);
  r.forward_cache.resize(p.forwards.size());

  r.x[0] = resolve(p.resolvents[0], lambda, z[0]);
  for (int i = 1; i <= n - 2; ++i) {
    r.forward_cache[i - 1] = forward_eval(p.forwards[i - 1], r.x[i - 1]);
    r.x[i] = resolve(p.resolvents[i], lambda,
                     step::chain_arg(z[i], z[i - 1], r.x[i - 1], r.forward_cache[i - 1], lambda));
  }
  const int last = n - 1;
  r.forward_cache[last - 1] = forward_eval(p.forwards[last - 1], r.x[last - 1]);
  r.x[last] = resolve(p.resolvents[last], lambda,
                      step::last_arg(r.x[0], r.x[last - 1], z[last - 1],
                                     r.forward_cache[last - 1], lambda));
  return r;
}

SweepResult sweep_frb(const ProblemInstance& p, const StepParams& sp,
                      const std::vector<Vector>& z) {
  check_sweep_inputs(p, sp, z, Mode::Lipschitz);
  const double lambda = sp.lambda;
  const int n = p.n;
  SweepResult r;
  r.x.resize(n);
  r.forward_cache.resize(p.forwards.size());

  r.x[0] = resolve(p.resolvents[0], lambda, z[0]);
  Vector reflected;  // lambda (B_{i-1}(x_i) - B_{i-1}(x_{i-1})) handed to step i+1
  for (int i = 1; i <= n - 2; ++i) {
    const Vector own = forward_eval(p.forwards[i - 1], r.x[i - 1]);
    r.forward_cache[i - 1] = own;
    const Vector arg =
        i == 1 ? step::chain_arg(z[1], z[0], r.x[0], own, lambda)
               : step::chain_arg_reflected(z[i], z[i - 1], r.x[i - 1], own, reflected, lambda);
    r.x[i] = resolve(p.resolvents[i], lambda, arg);
    reflected = step::reflected_term(forward_eval(p.forwards[i - 1], r.x[i]), own, lambda);
  }
  r.x[n - 1] = resolve(p.resolvents[n - 1], lambda,
                       step::last_arg_reflected_only(r.x[0], r.x[n - 2], z[n - 2], reflected));
  return r;
}

SweepResult sweep_mixed(const ProblemInstance& p, const StepParams& sp,
                        const std::vector<Vector>& z) {
  check_sweep_inputs(p, sp, z, Mode::Mixed);
  const double lambda = sp.lambda;
  const int n = p.n;
  SweepResult r;
  r.x.resize(n);
  r.forward_cache.resize(p.forwards.size());

  r.x[0] = resolve(p.resolvents[0], lambda, z[0]);
  Vector reflected;  // zero when the upstream operator is cocoercive
  for (int i = 1; i <= n - 2; ++i) {
    const Vector own = forward_eval(p.forwards[i - 1], r.x[i - 1]);
    r.forward_cache[i - 1] = own;
    const Vector arg =
        i == 1 ? step::chain_arg(z[1], z[0], r.x[0], own, lambda)
               : step::chain_arg_reflected(z[i], z[i - 1], r.x[i - 1], own, reflected, lambda);
    r.x[i] = resolve(p.resolvents[i], lambda, arg);
    reflected = p.forwards[i - 1].regularity == Regularity::LipschitzMonotone
                    ? step::reflected_term(forward_eval(p.forwards[i - 1], r.x[i]), own, lambda)
                    : Vector::Zero(p.dim);
  }
  const int last = n - 1;
  const Vector own = forward_eval(p.forwards[last - 1], r.x[last - 1]);
  r.forward_cache[last - 1] = own;
  r.x[last] = resolve(p.resolvents[last], lambda,
                      step::last_arg_reflected(r.x[0], r.x[last - 1], z[last - 1], own, reflected,
                                               lambda));
  return r;
}

// ---- fixed-point operator applications ----

namespace {

ApplyResult finish_apply(const StepParams& sp, const std::vector<Vector>& z, SweepResult sweep) {
  ApplyResult out;
  out.x = std::move(sweep.x);
  out.forward_cache = std::move(sweep.forward_cache);
  out.z_next.resize(z.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out.z_next[i] = step::z_step(z[i], out.x[i + 1], out.x[i], sp.gamma);
    acc += step::residual_partial(out.x[i + 1], out.x[i], sp.gamma);
  }
  out.residual_sq = acc;
  return out;
}

}  // namespace

ApplyResult apply_fb(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z) {
  return finish_apply(sp, z, sweep_cocoercive(p, sp, z));
}

ApplyResult apply_frb(const ProblemInstance& p, const StepParams& sp,
                      const std::vector<Vector>& z) {
  return finish_apply(sp, z, sweep_frb(p, sp, z));
}

ApplyResult apply_mixed(const ProblemInstance& p, const StepParams& sp,
                        const std::vector<Vector>& z) {
  return finish_apply(sp, z, sweep_mixed(p, sp, z));
}

ApplyResult apply_step(const ProblemInstance& p, const StepParams& sp,
                       const std::vector<Vector>& z) {
  switch (p.mode) {
    case Mode::Cocoercive: return apply_fb(p, sp, z);
    case Mode::Lipschitz: return apply_frb(p, sp, z);
    case Mode::Mixed: return apply_mixed(p, sp, z);
  }
  throw Error(Errc::InvalidProblem, "unknown mode");
}

SplitState initial_state(const ProblemInstance& p, const std::vector<Vector>& z0) {
  check_governing(p, z0, "initial governing variables");
  SplitState st;
  st.z = z0;
  return st;
}

void advance(const ProblemInstance& p, const StepParams& sp, SplitState& state) {
  ApplyResult r = apply_step(p, sp, state.z);
  state.z = std::move(r.z_next);
  state.x = std::move(r.x);
  state.forward_cache = std::move(r.forward_cache);
  state.last_residual_sq = r.residual_sq;
  ++state.k;
}

double consensus_gap(const std::vector<Vector>& x) {
  double gap = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    gap = std::max(gap, step::diff_norm(x[i + 1], x[i]));
  return gap;
}

std::vector<Vector> zero_governing(const ProblemInstance& p) {
  return std::vector<Vector>(static_cast<std::size_t>(p.n - 1), Vector::Zero(p.dim));
}

// ---- fixed points ----

std::vector<Vector> build_fixed_point(const ProblemInstance& p, const StepParams& sp,
                                      const Vector& x_star, const std::vector<Vector>& v) {
  validate_instance(p);
  require_dim(x_star, p.dim, "x_star");
  require_finite(x_star, "x_star");
  if (v.size() != static_cast<std::size_t>(p.n))
    throw Error(Errc::DimensionMismatch,
                "certificate must have one element per resolvent, got " + std::to_string(v.size()));
  Vector cert = Vector::Zero(p.dim);
  for (const Vector& vi : v) {
    require_dim(vi, p.dim, "certificate entry");
    require_finite(vi, "certificate entry");
    cert += vi;
  }
  for (const ForwardOp& op : p.forwards) cert += forward_eval(op, x_star);
  const double cert_norm = cert.norm();
  if (cert_norm > 1e-9)
    throw Error(Errc::InvalidCertificate,
                "certificate residual " + fmt(cert_norm) + " exceeds 1e-9");

  std::vector<Vector> zbar(static_cast<std::size_t>(p.n - 1));
  zbar[0] = x_star + sp.lambda * v[0];
  for (int i = 1; i <= p.n - 2; ++i)
    zbar[i] = sp.lambda * v[i] + zbar[i - 1] + sp.lambda * forward_value(p, i, x_star);
  return zbar;
}

ExtractResult extract_solution(const ProblemInstance& p, const StepParams& sp,
                               const std::vector<Vector>& z_bar) {
  validate_instance(p);
  check_governing(p, z_bar, "governing fixed point");
  ExtractResult out;
  out.x_star = resolve(p.resolvents[0], sp.lambda, z_bar[0]);
  for (int i = 1; i <= p.n - 2; ++i) {
    const Vector arg =
        z_bar[i] - z_bar[i - 1] + out.x_star - sp.lambda * forward_value(p, i, out.x_star);
    out.max_deviation = std::max(
        out.max_deviation, step::diff_norm(resolve(p.resolvents[i], sp.lambda, arg), out.x_star));
  }
  const Vector arg_last =
      2.0 * out.x_star - z_bar[p.n - 2] - sp.lambda * forward_value(p, p.n - 1, out.x_star);
  out.max_deviation =
      std::max(out.max_deviation,
               step::diff_norm(resolve(p.resolvents[p.n - 1], sp.lambda, arg_last), out.x_star));
  return out;
}

// ---- driver ----

namespace {

void check_stop_rule(const StopRule& stop) {
  if (stop.max_iters < 1) throw Error(Errc::InvalidParams, "max_iters must be at least 1");
  if (stop.check_period < 1) throw Error(Errc::InvalidParams, "check_period must be at least 1");
  if (std::isnan(stop.tol_residual_sq))
    throw Error(Errc::InvalidParams, "tol_residual_sq must not be NaN");
}

}  // namespace

SolveResult iterate(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z0,
                    const StopRule& stop) {
  validate_instance(p);
  check_stop_rule(stop);
  const ParamCheck chk = validate_params(p.n, p.mode, max_lipschitz(p), sp.lambda, sp.gamma);
  if (!chk.ok) throw Error(Errc::InvalidParams, chk.reason);

  SplitState st = initial_state(p, z0);
  SolveResult out;
  out.trace.has_duals = stop.record_duals;
  out.status = SolveStatus::MaxIters;
  const auto start = std::chrono::steady_clock::now();

  while (st.k < stop.max_iters) {
    advance(p, sp, st);
    const bool record = (st.k % stop.check_period == 0) || (st.k == stop.max_iters);
    if (!record) continue;
    TraceRow row;
    row.k = st.k;
    row.residual_sq = st.last_residual_sq;
    row.consensus_gap = consensus_gap(st.x);
    if (stop.record_duals) row.dual_values = st.forward_cache;
    row.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.trace.rows.push_back(std::move(row));
    if (st.last_residual_sq <= stop.tol_residual_sq) {
      out.status = SolveStatus::Converged;
      break;
    }
  }

  out.z = std::move(st.z);
  out.x = std::move(st.x);
  out.iterations = st.k;
  return out;
}

std::vector<std::vector<double>> dual_trajectory(const Trace& trace) {
  if (!trace.has_duals || trace.rows.empty() || trace.rows.front().dual_values.empty())
    throw Error(Errc::MissingData, "trace was recorded without dual values");
  const std::size_t m = trace.rows.front().dual_values.size();
  const std::vector<Vector>& final_duals = trace.rows.back().dual_values;
  std::vector<std::vector<double>> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    out[j].reserve(trace.rows.size());
    for (const TraceRow& row : trace.rows)
      out[j].push_back(step::diff_norm(row.dual_values[j], final_duals[j]));
  }
  return out;
}

}  // namespace ringsplit
