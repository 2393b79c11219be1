#pragma once

#include <cstdint>
#include <variant>

#include "ringsplit/common.hpp"

namespace ringsplit {

// ---------------------------------------------------------------------------
// Set-valued maximally monotone operators, represented solely by their
// resolvent map u -> (I + lambda A)^{-1}(u).
// ---------------------------------------------------------------------------

struct ZeroResolvent {};  // A = 0, resolvent is the identity
struct L1Prox {
  double weight = 1.0;  // A = subdifferential of weight * sum_j |x_j|
};
struct BoxProjection {
  Vector lower, upper;  // A = normal cone of the box; entries may be +-inf
};
struct HalfspaceProjection {
  Vector normal;
  double offset = 0.0;  // half-space {x : <normal, x> <= offset}
};
struct AffineResolvent {
  Matrix q;  // A(x) = Qx + c with Q symmetric PSD
  Vector c;
};
struct SubdiffAbsSum {};  // A = subdifferential of sum_j |x_j|

using ResolventKind = std::variant<ZeroResolvent, L1Prox, BoxProjection, HalfspaceProjection,
                                   AffineResolvent, SubdiffAbsSum>;

struct ResolventOp {
  ResolventKind kind;
  Eigen::Index dim = 0;
};

ResolventOp zero_resolvent(Eigen::Index dim);
ResolventOp l1_prox(Eigen::Index dim, double weight);
ResolventOp box_projection(Vector lower, Vector upper);
ResolventOp halfspace_projection(Vector normal, double offset);
ResolventOp affine_resolvent(Matrix q, Vector c);
ResolventOp subdiff_abs_sum(Eigen::Index dim);

/// Evaluates the resolvent with parameter lambda > 0 at u. Deterministic:
/// identical inputs give bit-identical outputs.
Vector resolve(const ResolventOp& op, double lambda, const Vector& u);

// ---------------------------------------------------------------------------
// Single-valued forward operators with a declared regularity class and
// Lipschitz constant (an upper bound supplied by the caller).
// ---------------------------------------------------------------------------

enum class Regularity { Cocoercive, LipschitzMonotone };

struct ZeroMap {};
struct AffineMap {
  Matrix m;  // B(x) = Mx + c
  Vector c;
};
struct QuadGradient {
  Matrix q;  // B(x) = Qx - c, the gradient of 0.5 x'Qx - c'x
  Vector c;
};
struct SkewMap {
  Matrix k;  // B(x) = Kx with K skew-symmetric
};
struct SaddleBilinear {
  Matrix p;  // B(x, y) = (P y, -P' x) on R^{rows+cols}
};

using ForwardKind = std::variant<ZeroMap, AffineMap, QuadGradient, SkewMap, SaddleBilinear>;

struct ForwardOp {
  ForwardKind kind;
  Regularity regularity = Regularity::Cocoercive;
  double lipschitz = 0.0;  // L; zero only for ZeroMap
  Eigen::Index dim = 0;
};

ForwardOp zero_map(Eigen::Index dim, Regularity reg = Regularity::Cocoercive);
ForwardOp affine_map(Matrix m, Vector c, Regularity reg, double lipschitz);
ForwardOp quad_gradient(Matrix q, Vector c, double lipschitz,
                        Regularity reg = Regularity::Cocoercive);
ForwardOp skew_map(Matrix k, double lipschitz);
ForwardOp saddle_bilinear(Matrix p, double lipschitz);

Vector forward_eval(const ForwardOp& op, const Vector& x);

// ---------------------------------------------------------------------------
// Sampled property checks over seeded random pairs.
// ---------------------------------------------------------------------------

struct PropertyReport {
  double max_violation = 0.0;
  bool pass = false;
};

/// Max violation of <J(u)-J(v), (u-J(u)) - (v-J(v))> >= 0; pass iff <= 1e-10.
PropertyReport check_firm_nonexpansive(const ResolventOp& op, double lambda, int samples,
                                       std::uint64_t seed);
/// Max violation of <B(x)-B(y), x-y> >= (1/L) |B(x)-B(y)|^2.
PropertyReport check_cocoercive(const ForwardOp& op, int samples, std::uint64_t seed);
/// Max violation of <B(x)-B(y), x-y> >= 0.
PropertyReport check_monotone(const ForwardOp& op, int samples, std::uint64_t seed);
/// Max violation of |B(x)-B(y)| <= L (1 + 1e-10) |x-y|.
PropertyReport check_lipschitz(const ForwardOp& op, int samples, std::uint64_t seed);

// Thread-local instrumentation used by the operator-accounting tests.
struct EvalCounters {
  std::uint64_t resolve_calls = 0;
  std::uint64_t forward_evals = 0;
};
const EvalCounters& eval_counters();
void reset_eval_counters();

}  // namespace ringsplit
