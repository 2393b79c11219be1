#pragma once

// Shared test machinery: seeded instance generators, reference iterations
// coded directly from their textbook forms, and straight-line transcription
// oracles for the sweeps. Everything here is independent of the library's
// sweep/apply composition path.

#include <cmath>
#include <vector>

#include "ringsplit/problems.hpp"
#include "ringsplit/rng.hpp"
#include "ringsplit/splitting.hpp"

namespace testutil {

using namespace ringsplit;

inline bool bits_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

inline bool bits_equal(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!bits_equal(a[i], b[i])) return false;
  return true;
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline double max_abs_diff(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, max_abs_diff(a[i], b[i]));
  return out;
}

inline double stacked_norm_sq(const std::vector<Vector>& v) {
  double acc = 0.0;
  for (const Vector& vi : v) acc += vi.squaredNorm();
  return acc;
}

inline double stacked_dist(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]).squaredNorm();
  return std::sqrt(acc);
}

inline std::vector<Vector> random_governing(const ProblemInstance& p, Rng& rng, double radius) {
  std::vector<Vector> z;
  for (int i = 0; i < p.n - 1; ++i) z.push_back(rng.vector(p.dim, -radius, radius));
  return z;
}

// ---------------------------------------------------------------------------
// Seeded instance generators exercising the operator catalog.
// ---------------------------------------------------------------------------

inline Matrix random_spd(Rng& rng, int d, double diag_boost) {
  const Matrix m = rng.matrix(d, d, -1.0, 1.0);
  Matrix q = (m.transpose() * m) / static_cast<double>(d);
  q += diag_boost * Matrix::Identity(d, d);
  return q;
}

inline Matrix random_skew(Rng& rng, int d) {
  const Matrix m = rng.matrix(d, d, -1.0, 1.0);
  return Matrix((m - m.transpose()) / 2.0);
}

inline ResolventOp random_resolvent(Rng& rng, int d, int which) {
  switch (which % 5) {
    case 0: return zero_resolvent(d);
    case 1: return l1_prox(d, rng.uniform(0.1, 1.0));
    case 2: {
      const Vector lo = rng.vector(d, -3.0, -0.5);
      const Vector hi = rng.vector(d, 0.5, 3.0);
      return box_projection(lo, hi);
    }
    case 3: return affine_resolvent(random_spd(rng, d, 0.2), rng.vector(d, -1.0, 1.0));
    default: return subdiff_abs_sum(d);
  }
}

inline ProblemInstance random_cocoercive_instance(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  ProblemInstance p;
  p.n = n;
  p.dim = d;
  p.mode = Mode::Cocoercive;
  for (int i = 0; i < n; ++i) p.resolvents.push_back(random_resolvent(rng, d, i));
  for (int i = 0; i < n - 1; ++i) {
    Matrix q = random_spd(rng, d, 0.1);
    const double li = spectral_bound_sym(q);
    p.forwards.push_back(quad_gradient(std::move(q), rng.vector(d, -1.0, 1.0), li));
  }
  return p;
}

inline ProblemInstance random_lipschitz_instance(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  ProblemInstance p;
  p.n = n;
  p.dim = d;
  p.mode = Mode::Lipschitz;
  for (int i = 0; i < n; ++i) p.resolvents.push_back(random_resolvent(rng, d, i + 1));
  for (int i = 0; i < n - 2; ++i) {
    // monotone affine field: PSD symmetric part plus a skew part
    Matrix m = random_spd(rng, d, 0.05) + random_skew(rng, d);
    const double li = spectral_bound(m);
    p.forwards.push_back(affine_map(std::move(m), rng.vector(d, -0.5, 0.5),
                                    Regularity::LipschitzMonotone, li));
  }
  return p;
}

inline ProblemInstance random_mixed_instance(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  ProblemInstance p;
  p.n = n;
  p.dim = d;
  p.mode = Mode::Mixed;
  for (int i = 0; i < n; ++i) p.resolvents.push_back(random_resolvent(rng, d, i + 2));
  for (int i = 0; i < n - 1; ++i) {
    const bool last = i == n - 2;
    if (!last && i % 2 == 0) {
      Matrix m = random_spd(rng, d, 0.05) + random_skew(rng, d);
      const double li = spectral_bound(m);
      p.forwards.push_back(affine_map(std::move(m), rng.vector(d, -0.5, 0.5),
                                      Regularity::LipschitzMonotone, li));
    } else {
      Matrix q = random_spd(rng, d, 0.1);
      const double li = spectral_bound_sym(q);
      p.forwards.push_back(quad_gradient(std::move(q), rng.vector(d, -1.0, 1.0), li));
    }
  }
  return p;
}

inline ProblemInstance random_instance(Mode mode, int n, int d, std::uint64_t seed) {
  switch (mode) {
    case Mode::Cocoercive: return random_cocoercive_instance(n, d, seed);
    case Mode::Lipschitz: return random_lipschitz_instance(n, d, seed);
    default: return random_mixed_instance(n, d, seed);
  }
}

// ---------------------------------------------------------------------------
// Affine instances with an exact zero and fixed-point certificate: every
// resolvent is affine (A_i(x) = Q_i x + c_i), every forward map is affine
// monotone, so the unique zero solves a linear system and v_i = Q_i x* + c_i
// is the certificate.
// ---------------------------------------------------------------------------

struct CertifiedInstance {
  ProblemInstance problem;
  Vector x_star;
  std::vector<Vector> v;
};

inline CertifiedInstance certified_affine_instance(Mode mode, int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  CertifiedInstance out;
  ProblemInstance& p = out.problem;
  p.n = n;
  p.dim = d;
  p.mode = mode;

  Matrix total = Matrix::Zero(d, d);
  Vector offset = Vector::Zero(d);
  std::vector<Matrix> qs;
  std::vector<Vector> cs;
  for (int i = 0; i < n; ++i) {
    Matrix q = random_spd(rng, d, 0.2);
    Vector c = rng.vector(d, -1.0, 1.0);
    total += q;
    offset += c;
    p.resolvents.push_back(affine_resolvent(q, c));
    qs.push_back(std::move(q));
    cs.push_back(std::move(c));
  }
  const std::size_t m = forward_arity(mode, n);
  for (std::size_t j = 0; j < m; ++j) {
    const bool coco = mode == Mode::Cocoercive || (mode == Mode::Mixed && (j + 1 == m || j % 2 == 1));
    if (coco) {
      Matrix q = random_spd(rng, d, 0.1);
      Vector c = rng.vector(d, -1.0, 1.0);
      total += q;
      offset -= c;  // quad gradient is Qx - c
      const double li = spectral_bound_sym(q);
      p.forwards.push_back(quad_gradient(std::move(q), std::move(c), li));
    } else {
      Matrix mm = random_spd(rng, d, 0.05) + random_skew(rng, d);
      Vector c = rng.vector(d, -0.5, 0.5);
      total += mm;
      offset += c;
      const double li = spectral_bound(mm);
      p.forwards.push_back(affine_map(std::move(mm), std::move(c), Regularity::LipschitzMonotone, li));
    }
  }

  // zero of sum A_i + sum B_j: (sum Q) x = -(sum offsets)
  out.x_star = Eigen::PartialPivLU<Matrix>(total).solve(Vector(-offset));
  for (int i = 0; i < n; ++i) out.v.push_back(Vector(qs[i] * out.x_star + cs[i]));
  return out;
}

// ---------------------------------------------------------------------------
// Reference iterations, coded directly from their two- and B=0-operator forms.
// ---------------------------------------------------------------------------

// x = J_{lambda A1}(z); z <- z + gamma (J_{lambda A2}(2x - z - lambda B1(x)) - x)
inline std::vector<Vector> davis_yin_reference(const ResolventOp& a1, const ResolventOp& a2,
                                               const ForwardOp& b1, double lambda, double gamma,
                                               const Vector& z0, int iters) {
  std::vector<Vector> zs;
  zs.push_back(z0);
  Vector z = z0;
  for (int k = 0; k < iters; ++k) {
    const Vector x = resolve(a1, lambda, z);
    const Vector y = resolve(a2, lambda, 2.0 * x - z - lambda * forward_eval(b1, x));
    z = z + gamma * (y - x);
    zs.push_back(z);
  }
  return zs;
}

// resolvent splitting with (n-1)-fold lifting and no forward terms
inline std::vector<std::vector<Vector>> resolvent_splitting_reference(
    const std::vector<ResolventOp>& as, double lambda, double gamma,
    const std::vector<Vector>& z0, int iters) {
  const int n = static_cast<int>(as.size());
  std::vector<std::vector<Vector>> zs;
  zs.push_back(z0);
  std::vector<Vector> z = z0;
  for (int k = 0; k < iters; ++k) {
    std::vector<Vector> x(n);
    x[0] = resolve(as[0], lambda, z[0]);
    for (int i = 1; i <= n - 2; ++i)
      x[i] = resolve(as[i], lambda, z[i] + x[i - 1] - z[i - 1]);
    x[n - 1] = resolve(as[n - 1], lambda, x[0] + x[n - 2] - z[n - 2]);
    for (int i = 0; i < n - 1; ++i) z[i] = z[i] + gamma * (x[i + 1] - x[i]);
    zs.push_back(z);
  }
  return zs;
}

// ---------------------------------------------------------------------------
// Straight-line transcription oracles for one sweep. These re-type the
// recursions directly instead of calling the library's sweep functions.
// ---------------------------------------------------------------------------

inline std::vector<Vector> oracle_sweep_cocoercive(const ProblemInstance& p, double lambda,
                                                   const std::vector<Vector>& z) {
  const int n = p.n;
  std::vector<Vector> x(n);
  x[0] = resolve(p.resolvents[0], lambda, z[0]);
  for (int i = 1; i <= n - 2; ++i)
    x[i] = resolve(p.resolvents[i], lambda,
                   Vector(z[i] + x[i - 1] - z[i - 1] -
                          lambda * forward_eval(p.forwards[i - 1], x[i - 1])));
  x[n - 1] = resolve(p.resolvents[n - 1], lambda,
                     Vector(x[0] + x[n - 2] - z[n - 2] -
                            lambda * forward_eval(p.forwards[n - 2], x[n - 2])));
  return x;
}

inline std::vector<Vector> oracle_sweep_frb(const ProblemInstance& p, double lambda,
                                            const std::vector<Vector>& z) {
  const int n = p.n;
  std::vector<Vector> x(n);
  x[0] = resolve(p.resolvents[0], lambda, z[0]);
  x[1] = resolve(p.resolvents[1], lambda,
                 Vector(z[1] + x[0] - z[0] - lambda * forward_eval(p.forwards[0], x[0])));
  for (int i = 2; i <= n - 2; ++i)
    x[i] = resolve(p.resolvents[i], lambda,
                   Vector(z[i] + x[i - 1] - z[i - 1] -
                          lambda * forward_eval(p.forwards[i - 1], x[i - 1]) -
                          lambda * Vector(forward_eval(p.forwards[i - 2], x[i - 1]) -
                                          forward_eval(p.forwards[i - 2], x[i - 2]))));
  x[n - 1] = resolve(p.resolvents[n - 1], lambda,
                     Vector(x[0] + x[n - 2] - z[n - 2] -
                            lambda * Vector(forward_eval(p.forwards[n - 3], x[n - 2]) -
                                            forward_eval(p.forwards[n - 3], x[n - 3]))));
  return x;
}

inline std::vector<Vector> oracle_sweep_mixed(const ProblemInstance& p, double lambda,
                                              const std::vector<Vector>& z) {
  const int n = p.n;
  std::vector<Vector> x(n);
  const auto b_term = [&](int j, int i_new, int i_old) -> Vector {
    if (p.forwards[j].regularity == Regularity::Cocoercive) return Vector::Zero(p.dim);
    return Vector(forward_eval(p.forwards[j], x[i_new]) - forward_eval(p.forwards[j], x[i_old]));
  };
  x[0] = resolve(p.resolvents[0], lambda, z[0]);
  x[1] = resolve(p.resolvents[1], lambda,
                 Vector(z[1] + x[0] - z[0] - lambda * forward_eval(p.forwards[0], x[0])));
  for (int i = 2; i <= n - 2; ++i)
    x[i] = resolve(p.resolvents[i], lambda,
                   Vector(z[i] + x[i - 1] - z[i - 1] -
                          lambda * forward_eval(p.forwards[i - 1], x[i - 1]) -
                          lambda * b_term(i - 2, i - 1, i - 2)));
  x[n - 1] = resolve(p.resolvents[n - 1], lambda,
                     Vector(x[0] + x[n - 2] - z[n - 2] -
                            lambda * forward_eval(p.forwards[n - 2], x[n - 2]) -
                            lambda * b_term(n - 3, n - 2, n - 3)));
  return x;
}

// ---------------------------------------------------------------------------
// Inequality slacks, relative to |z - zbar|^2.
// ---------------------------------------------------------------------------

// averaged-type inequality for the cocoercive operator: relative slack of
//   |Tz - Tz'|^2 + c1 |(I-T)z - (I-T)z'|^2 + (1/gamma) |sum_i ((I-T)z - (I-T)z')_i|^2
//     <= |z - z'|^2,   c1 = (1 - gamma)/gamma - lambda L / (2 gamma)
inline double averaged_slack(const ProblemInstance& p, const StepParams& sp,
                             const std::vector<Vector>& z, const std::vector<Vector>& zb) {
  const ApplyResult tz = apply_fb(p, sp, z);
  const ApplyResult tzb = apply_fb(p, sp, zb);
  const double c1 = (1.0 - sp.gamma) / sp.gamma - sp.lambda * sp.lipschitz / (2.0 * sp.gamma);
  double lhs = 0.0;
  Vector sum_diff = Vector::Zero(p.dim);
  for (std::size_t i = 0; i < z.size(); ++i) {
    lhs += (tz.z_next[i] - tzb.z_next[i]).squaredNorm();
    const Vector di = (z[i] - tz.z_next[i]) - (zb[i] - tzb.z_next[i]);
    lhs += c1 * di.squaredNorm();
    sum_diff += di;
  }
  lhs += sum_diff.squaredNorm() / sp.gamma;
  const double rhs = stacked_norm_sq([&] {
    std::vector<Vector> d;
    for (std::size_t i = 0; i < z.size(); ++i) d.push_back(Vector(z[i] - zb[i]));
    return d;
  }());
  return (rhs - lhs) / std::max(rhs, 1e-300);
}

// n = 2 sharpened variant with coefficient (2 - gamma)/gamma - lambda L/(2 gamma)
inline double averaged_slack_n2(const ProblemInstance& p, const StepParams& sp, const Vector& z,
                                const Vector& zb) {
  const ApplyResult tz = apply_fb(p, sp, {z});
  const ApplyResult tzb = apply_fb(p, sp, {zb});
  const double c = (2.0 - sp.gamma) / sp.gamma - sp.lambda * sp.lipschitz / (2.0 * sp.gamma);
  const double lhs = (tz.z_next[0] - tzb.z_next[0]).squaredNorm() +
                     c * ((z - tz.z_next[0]) - (zb - tzb.z_next[0])).squaredNorm();
  const double rhs = (z - zb).squaredNorm();
  return (rhs - lhs) / std::max(rhs, 1e-300);
}

// strong quasi-nonexpansiveness of the reflected operator against a fixed
// point zbar, including the two boundary terms gamma lambda L |(I-T)z_1|^2
// and gamma lambda L |(I-T)z_{n-1}|^2
inline double quasi_slack(const ProblemInstance& p, const StepParams& sp,
                          const std::vector<Vector>& z, const std::vector<Vector>& zb,
                          bool mixed = false) {
  const ApplyResult tz = mixed ? apply_mixed(p, sp, z) : apply_frb(p, sp, z);
  const double c1 = (1.0 - sp.gamma) / sp.gamma - 2.0 * sp.lambda * sp.lipschitz / sp.gamma;
  double lhs = 0.0;
  Vector sum_res = Vector::Zero(p.dim);
  std::vector<Vector> res;
  for (std::size_t i = 0; i < z.size(); ++i) {
    lhs += (tz.z_next[i] - zb[i]).squaredNorm();
    res.push_back(Vector(z[i] - tz.z_next[i]));
    lhs += c1 * res.back().squaredNorm();
    sum_res += res.back();
  }
  lhs += sum_res.squaredNorm() / sp.gamma;
  lhs += sp.gamma * sp.lambda * sp.lipschitz * res.front().squaredNorm();
  lhs += sp.gamma * sp.lambda * sp.lipschitz * res.back().squaredNorm();
  double rhs = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) rhs += (z[i] - zb[i]).squaredNorm();
  return (rhs - lhs) / std::max(rhs, 1e-300);
}

}  // namespace testutil
