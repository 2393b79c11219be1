#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ringsplit/splitting.hpp"

namespace ringsplit {

struct OracleSpec {
  enum class Kind { None, LinearSolve, GridSearch };
  Kind kind = Kind::None;
  double step = 1e-4;    // GridSearch
  double radius = 10.0;  // GridSearch
};

struct ProblemSpec {
  std::string name;
  ProblemInstance instance;
  std::optional<Vector> known_solution;
  OracleSpec oracle;
};

/// Consensus on seeded strongly convex quadratics: n identity resolvents and
/// n-1 quadratic gradients. The solution solves (sum Q_i) x = sum c_i by
/// direct factorization, independent of the splitting iteration.
ProblemSpec make_quadratic_consensus(int n, int d, std::uint64_t seed);

/// The planar rotation field with identity resolvents (n = 3, Lipschitz mode);
/// its unique zero is the origin and plain forward-backward diverges on it.
ProblemSpec make_rotation_counterexample();

struct IntervalBox {
  Vector lower, upper;  // entries may be +-inf
};

/// Feasibility over box intersections: box projections as resolvents, zero
/// forward operators. known_solution is set only when the intersection is a
/// single point.
ProblemSpec make_box_feasibility(const std::vector<IntervalBox>& boxes);

/// Unconstrained bilinear saddle coupling (n = 3, Lipschitz mode); the unique
/// stationary point of x'Py is the origin when P has full rank.
ProblemSpec make_bilinear_saddle(const Matrix& p);

struct RegularityReport {
  bool pass = true;
  std::string detail;  // first failing check, empty when pass
};

/// Runs the sampled operator property checks (firm nonexpansiveness of every
/// resolvent, declared regularity of every forward operator) on a spec.
RegularityReport verify_regularity(const ProblemSpec& spec, int samples, std::uint64_t seed);

/// Plain forward-backward iteration x <- J_{lambda A}(x - lambda B(x)).
/// Returns the iterates including the starting point.
std::vector<Vector> fb_baseline(const ForwardOp& b, const ResolventOp& a, double lambda,
                                const Vector& x0, int iters);

/// Product-space three-block splitting over n parallel blocks:
///   x = mean(z_i); z_i <- z_i + J_{lambda A_i}(2x - z_i - lambda B_i(x)) - x.
/// Returns the consensus iterates x^0..x^iters. Used as a cross-validation
/// solver; requires one forward operator per block (pad with zero maps).
std::vector<Vector> product_space_dy(const std::vector<ResolventOp>& resolvents,
                                     const std::vector<ForwardOp>& forwards, double lambda,
                                     const std::vector<Vector>& z0, int iters);

/// Blocks for product_space_dy: the spec's forwards padded with zero maps to
/// one per resolvent.
std::vector<ForwardOp> dy_padded_forwards(const ProblemSpec& spec);

/// Largest eigenvalue of a symmetric PSD matrix by power iteration (100
/// iterations or 1e-12 relative change), inflated by 1 + 1e-8 so the result
/// is a certified upper bound.
double spectral_bound_sym(const Matrix& q);
/// Spectral norm bound of a general matrix via power iteration on M'M.
double spectral_bound(const Matrix& m);

/// Direct symmetric factorization solve; the LinearSolve oracle.
Vector solve_spd(const Matrix& a, const Vector& b);

}  // namespace ringsplit
