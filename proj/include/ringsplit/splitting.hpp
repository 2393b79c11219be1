#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ringsplit/operators.hpp"

namespace ringsplit {

enum class Mode { Cocoercive, Lipschitz, Mixed };

const char* mode_name(Mode mode);

// Problem data: n set-valued operators A_1..A_n given through their resolvents
// plus the single-valued forward operators B_i threaded between them. Forward
// arity is n-1 in cocoercive and mixed runs and n-2 in Lipschitz runs; mixed
// runs additionally require the last forward operator to be cocoercive.
struct ProblemInstance {
  int n = 0;
  Eigen::Index dim = 0;
  Mode mode = Mode::Cocoercive;
  std::vector<ResolventOp> resolvents;  // A_1..A_n
  std::vector<ForwardOp> forwards;      // B_1..B_m
};

std::size_t forward_arity(Mode mode, int n);
void validate_instance(const ProblemInstance& p);  // throws Error
double max_lipschitz(const ProblemInstance& p);

// ---------------------------------------------------------------------------
// Step-size validation. All intervals are open; boundary values are rejected.
//   cocoercive, n >= 3: lambda in (0, 2/L), gamma in (0, 1 - lambda L / 2)
//   cocoercive, n == 2: lambda in (0, 4/L), gamma in (0, 2 - lambda L / 2)
//   lipschitz / mixed:  lambda in (0, 1/(2L)), gamma in (0, 1 - 2 lambda L)
// With L == 0 any lambda > 0 is admissible and the gamma bound is taken in
// the limit (1 for n >= 3 cocoercive and lipschitz/mixed, 2 for n == 2).
// ---------------------------------------------------------------------------

struct ParamCheck {
  bool ok = false;
  std::string reason;       // names the violated bound; empty when ok
  double lambda_max = 0.0;  // open upper bound for lambda
  double gamma_max = 0.0;   // open upper bound for gamma at the given lambda
};

ParamCheck validate_params(int n, Mode mode, double lipschitz, double lambda, double gamma);

struct StepParams {
  double lambda = 0.0;
  double gamma = 0.0;
  double lipschitz = 0.0;  // max over the instance's forward operators
  Mode mode = Mode::Cocoercive;
};

/// Validates (lambda, gamma) against the instance and packs them; throws on rejection.
StepParams make_params(const ProblemInstance& p, double lambda, double gamma);

/// Midrange lambda (half the open upper bound) with gamma at 0.9 of its bound;
/// (1, 0.9) when all forward operators vanish.
StepParams default_params(const ProblemInstance& p);

// ---------------------------------------------------------------------------
// Update kernels shared by the sequential driver and the ring agents. The
// evaluation order inside each kernel is part of the contract: both drivers
// perform the identical sequence of scalar operations, which is what makes
// their iterates agree bit for bit.
// ---------------------------------------------------------------------------

namespace step {

inline Vector chain_arg(const Vector& z_i, const Vector& z_prev, const Vector& x_prev,
                        const Vector& fwd_prev, double lambda) {
  return z_i + x_prev - z_prev - lambda * fwd_prev;
}

inline Vector chain_arg_reflected(const Vector& z_i, const Vector& z_prev, const Vector& x_prev,
                                  const Vector& fwd_prev, const Vector& reflected, double lambda) {
  return z_i + x_prev - z_prev - lambda * fwd_prev - reflected;
}

inline Vector last_arg(const Vector& x_first, const Vector& x_prev, const Vector& z_prev,
                       const Vector& fwd_prev, double lambda) {
  return x_first + x_prev - z_prev - lambda * fwd_prev;
}

inline Vector last_arg_reflected(const Vector& x_first, const Vector& x_prev,
                                 const Vector& z_prev, const Vector& fwd_prev,
                                 const Vector& reflected, double lambda) {
  return x_first + x_prev - z_prev - lambda * fwd_prev - reflected;
}

inline Vector last_arg_reflected_only(const Vector& x_first, const Vector& x_prev,
                                      const Vector& z_prev, const Vector& reflected) {
  return x_first + x_prev - z_prev - reflected;
}

inline Vector reflected_term(const Vector& fwd_new, const Vector& fwd_old, double lambda) {
  return lambda * (fwd_new - fwd_old);
}

inline Vector z_step(const Vector& z_i, const Vector& x_next, const Vector& x_i, double gamma) {
  return z_i + gamma * (x_next - x_i);
}

// gamma^2 |x_next - x_i|^2 with fixed left-to-right summation; the governing
// update makes the sum of these equal to |z_next - z|^2.
inline double residual_partial(const Vector& x_next, const Vector& x_i, double gamma) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < x_i.size(); ++j) {
    const double d = x_next[j] - x_i[j];
    acc += d * d;
  }
  return gamma * gamma * acc;
}

inline double diff_norm(const Vector& a, const Vector& b) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace step

// ---------------------------------------------------------------------------
// One sweep computes the shadow point x = (x_1..x_n) from the governing
// variables z = (z_1..z_{n-1}):
//
//   x_1 = J_{lambda A_1}(z_1)
//   x_i = J_{lambda A_i}(z_i + x_{i-1} - z_{i-1} - lambda B_{i-1}(x_{i-1}) [- r_i])
//   x_n = J_{lambda A_n}(x_1 + x_{n-1} - z_{n-1} [- lambda B_{n-1}(x_{n-1})] [- r_n])
//
// where r_i is the reflection correction lambda (B_{i-2}(x_{i-1}) - B_{i-2}(x_{i-2}))
// used when B_{i-2} is merely Lipschitz monotone. The governing update is
// z_i <- z_i + gamma (x_{i+1} - x_i). Cocoercive sweeps evaluate each forward
// operator at one point per sweep, Lipschitz sweeps at two.
// ---------------------------------------------------------------------------

struct SweepResult {
  std::vector<Vector> x;              // x_1..x_n
  std::vector<Vector> forward_cache;  // B_i(x_i) in operator order
};

SweepResult sweep_cocoercive(const ProblemInstance& p, const StepParams& sp,
                             const std::vector<Vector>& z);
SweepResult sweep_frb(const ProblemInstance& p, const StepParams& sp,
                      const std::vector<Vector>& z);
SweepResult sweep_mixed(const ProblemInstance& p, const StepParams& sp,
                        const std::vector<Vector>& z);

struct ApplyResult {
  std::vector<Vector> z_next;
  std::vector<Vector> x;
  std::vector<Vector> forward_cache;
  double residual_sq = 0.0;  // gamma^2 sum_i |x_{i+1} - x_i|^2 == |z_next - z|^2
};

ApplyResult apply_fb(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z);
ApplyResult apply_frb(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z);
ApplyResult apply_mixed(const ProblemInstance& p, const StepParams& sp,
                        const std::vector<Vector>& z);
/// Dispatches on p.mode.
ApplyResult apply_step(const ProblemInstance& p, const StepParams& sp,
                       const std::vector<Vector>& z);

// Driver state for the sequential iteration.
struct SplitState {
  std::vector<Vector> z;
  std::vector<Vector> x;
  std::vector<Vector> forward_cache;
  long k = 0;
  double last_residual_sq = 0.0;
};

SplitState initial_state(const ProblemInstance& p, const std::vector<Vector>& z0);
void advance(const ProblemInstance& p, const StepParams& sp, SplitState& state);

double consensus_gap(const std::vector<Vector>& x);  // max_i |x_{i+1} - x_i|

std::vector<Vector> zero_governing(const ProblemInstance& p);

// ---------------------------------------------------------------------------
// Fixed points. Given a zero x_star of the inclusion together with a
// certificate v (v_i in A_i(x_star), sum_i v_i + sum_i B_i(x_star) = 0 within
// 1e-9), builds the governing vector fixed by the splitting operator:
//   zbar_1 = x_star + lambda v_1
//   zbar_i = lambda v_i + zbar_{i-1} + lambda B_{i-1}(x_star)
// extract_solution inverts the construction via x = J_{lambda A_1}(zbar_1) and
// reports the worst deviation across the remaining consistency identities.
// ---------------------------------------------------------------------------

std::vector<Vector> build_fixed_point(const ProblemInstance& p, const StepParams& sp,
                                      const Vector& x_star, const std::vector<Vector>& v);

struct ExtractResult {
  Vector x_star;
  double max_deviation = 0.0;
};

ExtractResult extract_solution(const ProblemInstance& p, const StepParams& sp,
                               const std::vector<Vector>& z_bar);

// ---------------------------------------------------------------------------
// Sequential iteration with periodic residual checks.
// ---------------------------------------------------------------------------

struct StopRule {
  double tol_residual_sq = 1e-18;
  long max_iters = 1000000;
  long check_period = 1;
  bool record_duals = false;
};

enum class SolveStatus { Converged, MaxIters };

struct TraceRow {
  long k = 0;
  double residual_sq = 0.0;
  double consensus_gap = 0.0;
  std::vector<Vector> dual_values;  // B_i(x_i^k) when duals are recorded
  double wall_time = 0.0;           // seconds since the run started
};

struct Trace {
  std::vector<TraceRow> rows;
  bool has_duals = false;
};

struct SolveResult {
  std::vector<Vector> z;
  std::vector<Vector> x;
  Trace trace;
  SolveStatus status = SolveStatus::MaxIters;
  long iterations = 0;
};

SolveResult iterate(const ProblemInstance& p, const StepParams& sp, const std::vector<Vector>& z0,
                    const StopRule& stop);

/// Distances |B_i(x_i^k) - B_i(x_i^last)| per operator along the recorded rows.
std::vector<std::vector<double>> dual_trajectory(const Trace& trace);

}  // namespace ringsplit
