#include "ringsplit/problems.hpp"

#include <cmath>

#include "ringsplit/rng.hpp"

namespace ringsplit {

namespace {

double power_iteration_sym(const Matrix& s) {
  const Eigen::Index d = s.rows();
  Vector v = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  double lam = 0.0;
  for (int it = 0; it < 100; ++it) {
    Vector w = s * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    const double lam_new = v.dot(s * v);
    if (std::abs(lam_new - lam) <= 1e-12 * std::abs(lam_new)) return lam_new;
    lam = lam_new;
  }
  return lam;
}

}  // namespace

double spectral_bound_sym(const Matrix& q) { return power_iteration_sym(q) * (1.0 + 1e-8); }

double spectral_bound(const Matrix& m) {
  return std::sqrt(power_iteration_sym(m.transpose() * m)) * (1.0 + 1e-8);
}

Vector solve_spd(const Matrix& a, const Vector& b) {
  auto ldlt = a.ldlt();
  if (ldlt.info() != Eigen::Success)
    throw Error(Errc::InvalidProblem, "direct solve failed: matrix is not factorizable");
  return ldlt.solve(b);
}

ProblemSpec make_quadratic_consensus(int n, int d, std::uint64_t seed) {
  if (n < 2) throw Error(Errc::InvalidProblem, "quadratic consensus needs n >= 2");
  if (d < 1) throw Error(Errc::InvalidProblem, "quadratic consensus needs d >= 1");
  Rng rng(seed);

  ProblemSpec spec;
  spec.name = "quadratic_consensus";
  spec.oracle.kind = OracleSpec::Kind::LinearSolve;
  ProblemInstance& inst = spec.instance;
  inst.n = n;
  inst.dim = d;
  inst.mode = Mode::Cocoercive;

  for (int i = 0; i < n; ++i) inst.resolvents.push_back(zero_resolvent(d));

  Matrix q_sum = Matrix::Zero(d, d);
  Vector c_sum = Vector::Zero(d);
  for (int i = 0; i < n - 1; ++i) {
    const Matrix m = rng.matrix(d, d, -1.0, 1.0);
    Matrix q = (m.transpose() * m) / static_cast<double>(d);
    q += 0.1 * Matrix::Identity(d, d);
    const Vector c = rng.vector(d, -1.0, 1.0);
    q_sum += q;
    c_sum += c;
    const double li = spectral_bound_sym(q);
    inst.forwards.push_back(quad_gradient(std::move(q), c, li));
  }

  spec.known_solution = solve_spd(q_sum, c_sum);
  return spec;
}

ProblemSpec make_rotation_counterexample() {
  ProblemSpec spec;
  spec.name = "rotation";
  ProblemInstance& inst = spec.instance;
  inst.n = 3;
  inst.dim = 2;
  inst.mode = Mode::Lipschitz;
  for (int i = 0; i < 3; ++i) inst.resolvents.push_back(zero_resolvent(2));
  Matrix k(2, 2);
  k << 0.0, -1.0, 1.0, 0.0;
  inst.forwards.push_back(skew_map(std::move(k), 1.0));  // a rotation is an isometry
  spec.known_solution = Vector::Zero(2);
  return spec;
}

ProblemSpec make_box_feasibility(const std::vector<IntervalBox>& boxes) {
  if (boxes.size() < 2) throw Error(Errc::InvalidProblem, "box feasibility needs at least 2 boxes");
  const Eigen::Index d = boxes.front().lower.size();

  ProblemSpec spec;
  spec.name = "box_feasibility";
  ProblemInstance& inst = spec.instance;
  inst.n = static_cast<int>(boxes.size());
  inst.dim = d;
  inst.mode = Mode::Cocoercive;

  Vector lo = boxes.front().lower, hi = boxes.front().upper;
  for (const IntervalBox& box : boxes) {
    inst.resolvents.push_back(box_projection(box.lower, box.upper));
    lo = lo.cwiseMax(box.lower);
    hi = hi.cwiseMin(box.upper);
  }
  for (int i = 0; i < inst.n - 1; ++i) inst.forwards.push_back(zero_map(d));

  if ((lo.array() == hi.array()).all()) spec.known_solution = lo;  // singleton intersection
  return spec;
}

ProblemSpec make_bilinear_saddle(const Matrix& p) {
  if (p.rows() < 1 || p.cols() < 1 || p.cwiseAbs().maxCoeff() == 0.0)
    throw Error(Errc::InvalidProblem, "saddle coupling matrix must be nonzero");

  ProblemSpec spec;
  spec.name = "bilinear_saddle";
  ProblemInstance& inst = spec.instance;
  inst.n = 3;
  inst.dim = p.rows() + p.cols();
  inst.mode = Mode::Lipschitz;
  for (int i = 0; i < 3; ++i) inst.resolvents.push_back(zero_resolvent(inst.dim));
  inst.forwards.push_back(saddle_bilinear(p, spectral_bound(p)));
  spec.known_solution = Vector::Zero(inst.dim);
  return spec;
}

RegularityReport verify_regularity(const ProblemSpec& spec, int samples, std::uint64_t seed) {
  validate_instance(spec.instance);
  RegularityReport report;
  std::uint64_t s = seed;
  for (std::size_t i = 0; i < spec.instance.resolvents.size(); ++i) {
    for (double lambda : {0.37, 1.0}) {
      const PropertyReport r =
          check_firm_nonexpansive(spec.instance.resolvents[i], lambda, samples, ++s);
      if (!r.pass) {
        report.pass = false;
        report.detail = "resolvent " + std::to_string(i + 1) +
                        " failed firm nonexpansiveness, violation " + std::to_string(r.max_violation);
        return report;
      }
    }
  }
  for (std::size_t i = 0; i < spec.instance.forwards.size(); ++i) {
    const ForwardOp& op = spec.instance.forwards[i];
    const PropertyReport lip = check_lipschitz(op, samples, ++s);
    if (!lip.pass) {
      report.pass = false;
      report.detail = "forward operator " + std::to_string(i + 1) +
                      " exceeded its declared Lipschitz bound, violation " +
                      std::to_string(lip.max_violation);
      return report;
    }
    const PropertyReport reg = op.regularity == Regularity::Cocoercive
                                   ? check_cocoercive(op, samples, ++s)
                                   : check_monotone(op, samples, ++s);
    if (!reg.pass) {
      report.pass = false;
      report.detail = "forward operator " + std::to_string(i + 1) +
                      " failed its declared regularity, violation " +
                      std::to_string(reg.max_violation);
      return report;
    }
  }
  return report;
}

std::vector<Vector> fb_baseline(const ForwardOp& b, const ResolventOp& a, double lambda,
                                const Vector& x0, int iters) {
  if (iters < 1) throw Error(Errc::InvalidParams, "iters must be at least 1");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(iters) + 1);
  out.push_back(x0);
  Vector x = x0;
  for (int k = 0; k < iters; ++k) {
    x = resolve(a, lambda, x - lambda * forward_eval(b, x));
    out.push_back(x);
  }
  return out;
}

std::vector<Vector> product_space_dy(const std::vector<ResolventOp>& resolvents,
                                     const std::vector<ForwardOp>& forwards, double lambda,
                                     const std::vector<Vector>& z0, int iters) {
  const std::size_t n = resolvents.size();
  if (n < 1) throw Error(Errc::InvalidProblem, "product-space splitting needs at least one block");
  if (forwards.size() != n)
    throw Error(Errc::InvalidProblem, "product-space splitting needs one forward operator per block");
  if (z0.size() != n)
    throw Error(Errc::DimensionMismatch, "product-space splitting needs one initial block per operator");
  if (iters < 1) throw Error(Errc::InvalidParams, "iters must be at least 1");
  if (!(lambda > 0)) throw Error(Errc::InvalidParams, "lambda must be positive");

  std::vector<Vector> z = z0;
  const auto mean = [&] {
    Vector x = z[0];
    for (std::size_t i = 1; i < n; ++i) x += z[i];
    return Vector(x / static_cast<double>(n));
  };

  std::vector<Vector> xs;
  xs.reserve(static_cast<std::size_t>(iters) + 1);
  Vector x = mean();
  xs.push_back(x);
  for (int k = 0; k < iters; ++k) {
    std::vector<Vector> z_next(n);
    for (std::size_t i = 0; i < n; ++i)
      z_next[i] =
          z[i] + resolve(resolvents[i], lambda, 2.0 * x - z[i] - lambda * forward_eval(forwards[i], x)) -
          x;
    z = std::move(z_next);
    x = mean();
    xs.push_back(x);
  }
  return xs;
}

std::vector<ForwardOp> dy_padded_forwards(const ProblemSpec& spec) {
  std::vector<ForwardOp> forwards = spec.instance.forwards;
  while (forwards.size() < spec.instance.resolvents.size())
    forwards.push_back(zero_map(spec.instance.dim));
  return forwards;
}

}  // namespace ringsplit
