#include "ringsplit/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ringsplit/rng.hpp"

namespace ringsplit {

namespace {

thread_local EvalCounters g_counters;

constexpr double kPropertyTol = 1e-10;

bool finite_or_inf(const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (std::isnan(v[i])) return false;
  return true;
}

void require_square_symmetric(const Matrix& m, const char* what) {
  if (m.rows() != m.cols())
    throw Error(Errc::InvalidProblem, std::string(what) + " matrix must be square");
  if (!all_finite(m)) throw Error(Errc::NonFinite, std::string(what) + " matrix has non-finite entries");
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(Errc::InvalidProblem, std::string(what) + " matrix must be symmetric");
}

}  // namespace

const EvalCounters& eval_counters() { return g_counters; }
void reset_eval_counters() { g_counters = EvalCounters{}; }

// ---- resolvent catalog ----

ResolventOp zero_resolvent(Eigen::Index dim) {
  if (dim < 1) throw Error(Errc::InvalidProblem, "resolvent dimension must be positive");
  return {ZeroResolvent{}, dim};
}

ResolventOp l1_prox(Eigen::Index dim, double weight) {
  if (dim < 1) throw Error(Errc::InvalidProblem, "resolvent dimension must be positive");
  if (!(weight >= 0) || !std::isfinite(weight))
    throw Error(Errc::InvalidProblem, "l1 prox weight must be nonnegative");
  return {L1Prox{weight}, dim};
}

ResolventOp box_projection(Vector lower, Vector upper) {
  if (lower.size() != upper.size() || lower.size() < 1)
    throw Error(Errc::InvalidProblem, "box bounds must be nonempty and of equal dimension");
  if (!finite_or_inf(lower) || !finite_or_inf(upper))
    throw Error(Errc::NonFinite, "box bounds must not contain NaN");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i]))
      throw Error(Errc::InvalidProblem, "box lower bound exceeds upper bound at coordinate " +
                                            std::to_string(i));
  const Eigen::Index dim = lower.size();
  return {BoxProjection{std::move(lower), std::move(upper)}, dim};
}

ResolventOp halfspace_projection(Vector normal, double offset) {
  if (normal.size() < 1) throw Error(Errc::InvalidProblem, "half-space normal must be nonempty");
  require_finite(normal, "half-space normal");
  if (!std::isfinite(offset)) throw Error(Errc::NonFinite, "half-space offset must be finite");
  if (normal.squaredNorm() == 0.0)
    throw Error(Errc::InvalidProblem, "half-space normal must be nonzero");
  const Eigen::Index dim = normal.size();
  return {HalfspaceProjection{std::move(normal), offset}, dim};
}

ResolventOp affine_resolvent(Matrix q, Vector c) {
  require_square_symmetric(q, "affine resolvent");
  if (c.size() != q.rows())
    throw Error(Errc::DimensionMismatch, "affine resolvent offset dimension mismatch");
  require_finite(c, "affine resolvent offset");
  const Eigen::Index dim = q.rows();
  return {AffineResolvent{std::move(q), std::move(c)}, dim};
}

ResolventOp subdiff_abs_sum(Eigen::Index dim) {
  if (dim < 1) throw Error(Errc::InvalidProblem, "resolvent dimension must be positive");
  return {SubdiffAbsSum{}, dim};
}

namespace {

Vector soft_threshold(const Vector& u, double t) {
  Vector out(u.size());
  for (Eigen::Index j = 0; j < u.size(); ++j) {
    const double v = u[j];
    out[j] = v > t ? v - t : (v < -t ? v + t : 0.0);
  }
  return out;
}

}  // namespace

Vector resolve(const ResolventOp& op, double lambda, const Vector& u) {
  if (!(lambda > 0) || !std::isfinite(lambda))
    throw Error(Errc::InvalidParams, "resolvent parameter lambda must be positive and finite");
  require_dim(u, op.dim, "resolvent input");
  require_finite(u, "resolvent input");
  ++g_counters.resolve_calls;

  Vector out = std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroResolvent>) {
          return u;
        } else if constexpr (std::is_same_v<K, L1Prox>) {
          return soft_threshold(u, lambda * k.weight);
        } else if constexpr (std::is_same_v<K, BoxProjection>) {
          Vector out(u.size());
          for (Eigen::Index j = 0; j < u.size(); ++j)
            out[j] = std::min(std::max(u[j], k.lower[j]), k.upper[j]);
          return out;
        } else if constexpr (std::is_same_v<K, HalfspaceProjection>) {
          const double slack = k.normal.dot(u) - k.offset;
          if (slack <= 0.0) return u;
          return u - (slack / k.normal.squaredNorm()) * k.normal;
        } else if constexpr (std::is_same_v<K, AffineResolvent>) {
          // (I + lambda Q) v = u - lambda c, fresh factorization per call
          Matrix lhs = Matrix::Identity(op.dim, op.dim) + lambda * k.q;
          auto llt = lhs.llt();
          if (llt.info() != Eigen::Success)
            throw Error(Errc::InvalidProblem, "affine resolvent: I + lambda Q is not positive definite");
          return llt.solve(u - lambda * k.c);
        } else {
          static_assert(std::is_same_v<K, SubdiffAbsSum>);
          return soft_threshold(u, lambda);
        }
      },
      op.kind);

  require_finite(out, "resolvent output");
  return out;
}

// ---- forward catalog ----

ForwardOp zero_map(Eigen::Index dim, Regularity reg) {
  if (dim < 1) throw Error(Errc::InvalidProblem, "forward operator dimension must be positive");
  return {ZeroMap{}, reg, 0.0, dim};
}

namespace {

void require_positive_lipschitz(double lipschitz, const char* what) {
  if (!(lipschitz > 0) || !std::isfinite(lipschitz))
    throw Error(Errc::InvalidProblem, std::string(what) + " requires a positive Lipschitz constant");
}

}  // namespace

ForwardOp affine_map(Matrix m, Vector c, Regularity reg, double lipschitz) {
  if (m.rows() != m.cols()) throw Error(Errc::InvalidProblem, "affine map matrix must be square");
  if (!all_finite(m)) throw Error(Errc::NonFinite, "affine map matrix has non-finite entries");
  if (c.size() != m.rows()) throw Error(Errc::DimensionMismatch, "affine map offset dimension mismatch");
  require_finite(c, "affine map offset");
  require_positive_lipschitz(lipschitz, "affine map");
  const Eigen::Index dim = m.rows();
  return {AffineMap{std::move(m), std::move(c)}, reg, lipschitz, dim};
}

ForwardOp quad_gradient(Matrix q, Vector c, double lipschitz, Regularity reg) {
  require_square_symmetric(q, "quadratic gradient");
  if (c.size() != q.rows())
    throw Error(Errc::DimensionMismatch, "quadratic gradient offset dimension mismatch");
  require_finite(c, "quadratic gradient offset");
  require_positive_lipschitz(lipschitz, "quadratic gradient");
  const Eigen::Index dim = q.rows();
  return {QuadGradient{std::move(q), std::move(c)}, reg, lipschitz, dim};
}

ForwardOp skew_map(Matrix k, double lipschitz) {
  if (k.rows() != k.cols()) throw Error(Errc::InvalidProblem, "skew map matrix must be square");
  if (!all_finite(k)) throw Error(Errc::NonFinite, "skew map matrix has non-finite entries");
  const double scale = 1.0 + k.cwiseAbs().maxCoeff();
  if ((k + k.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(Errc::InvalidProblem, "skew map matrix must be skew-symmetric");
  require_positive_lipschitz(lipschitz, "skew map");
  const Eigen::Index dim = k.rows();
  return {SkewMap{std::move(k)}, Regularity::LipschitzMonotone, lipschitz, dim};
}

ForwardOp saddle_bilinear(Matrix p, double lipschitz) {
  if (p.rows() < 1 || p.cols() < 1)
    throw Error(Errc::InvalidProblem, "saddle coupling matrix must be nonempty");
  if (!all_finite(p)) throw Error(Errc::NonFinite, "saddle coupling matrix has non-finite entries");
  require_positive_lipschitz(lipschitz, "saddle bilinear map");
  const Eigen::Index dim = p.rows() + p.cols();
  return {SaddleBilinear{std::move(p)}, Regularity::LipschitzMonotone, lipschitz, dim};
}

Vector forward_eval(const ForwardOp& op, const Vector& x) {
  require_dim(x, op.dim, "forward operator input");
  require_finite(x, "forward operator input");
  ++g_counters.forward_evals;

  Vector out = std::visit(
      [&](const auto& k) -> Vector {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroMap>) {
          return Vector::Zero(op.dim);
        } else if constexpr (std::is_same_v<K, AffineMap>) {
          return k.m * x + k.c;
        } else if constexpr (std::is_same_v<K, QuadGradient>) {
          return k.q * x - k.c;
        } else if constexpr (std::is_same_v<K, SkewMap>) {
          return k.k * x;
        } else {
          static_assert(std::is_same_v<K, SaddleBilinear>);
          const Eigen::Index d1 = k.p.rows(), d2 = k.p.cols();
          Vector out(d1 + d2);
          out.head(d1) = k.p * x.tail(d2);
          out.tail(d2) = -k.p.transpose() * x.head(d1);
          return out;
        }
      },
      op.kind);

  require_finite(out, "forward operator output");
  return out;
}

// ---- sampled property checks ----

PropertyReport check_firm_nonexpansive(const ResolventOp& op, double lambda, int samples,
                                       std::uint64_t seed) {
  if (samples < 1) throw Error(Errc::InvalidParams, "samples must be at least 1");
  Rng rng(seed);
  double viol = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector u = rng.vector(op.dim, -3.0, 3.0);
    const Vector v = rng.vector(op.dim, -3.0, 3.0);
    const Vector ju = resolve(op, lambda, u);
    const Vector jv = resolve(op, lambda, v);
    const double inner = (ju - jv).dot((u - ju) - (v - jv));
    viol = std::max(viol, -inner);
  }
  return {viol, viol <= kPropertyTol};
}

PropertyReport check_cocoercive(const ForwardOp& op, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(Errc::InvalidParams, "samples must be at least 1");
  Rng rng(seed);
  double viol = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector x = rng.vector(op.dim, -3.0, 3.0);
    const Vector y = rng.vector(op.dim, -3.0, 3.0);
    const Vector db = forward_eval(op, x) - forward_eval(op, y);
    if (op.lipschitz == 0.0) {
      viol = std::max(viol, db.norm());
      continue;
    }
    const double gap = db.dot(x - y) - db.squaredNorm() / op.lipschitz;
    viol = std::max(viol, -gap);
  }
  return {viol, viol <= kPropertyTol};
}

PropertyReport check_monotone(const ForwardOp& op, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(Errc::InvalidParams, "samples must be at least 1");
  Rng rng(seed);
  double viol = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector x = rng.vector(op.dim, -3.0, 3.0);
    const Vector y = rng.vector(op.dim, -3.0, 3.0);
    const double inner = (forward_eval(op, x) - forward_eval(op, y)).dot(x - y);
    viol = std::max(viol, -inner);
  }
  return {viol, viol <= kPropertyTol};
}

PropertyReport check_lipschitz(const ForwardOp& op, int samples, std::uint64_t seed) {
  if (samples < 1) throw Error(Errc::InvalidParams, "samples must be at least 1");
  Rng rng(seed);
  double viol = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector x = rng.vector(op.dim, -3.0, 3.0);
    const Vector y = rng.vector(op.dim, -3.0, 3.0);
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    const double db = (forward_eval(op, x) - forward_eval(op, y)).norm();
    viol = std::max(viol, db - op.lipschitz * (1.0 + 1e-10) * dx);
  }
  return {viol, viol <= kPropertyTol};
}

}  // namespace ringsplit
