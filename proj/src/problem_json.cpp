#include "ringsplit/problem_json.hpp"

#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace ringsplit {

using nlohmann::ordered_json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ordered_json vector_to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json bound_to_json(const Vector& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::isinf(v[i]))
      a.push_back(nullptr);
    else
      a.push_back(v[i]);
  }
  return a;
}

ordered_json matrix_to_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const ordered_json& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw Error(Errc::Config, std::string(what) + " must be a nonempty array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw Error(Errc::Config, std::string(what) + " must hold numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

// bound arrays accept null for an unbounded coordinate
Vector bound_from_json(const ordered_json& a, const char* what, double sign) {
  if (!a.is_array() || a.empty())
    throw Error(Errc::Config, std::string(what) + " must be a nonempty array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_null())
      v[static_cast<Eigen::Index>(i)] = sign * kInf;
    else if (a[i].is_number())
      v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    else
      throw Error(Errc::Config, std::string(what) + " must hold numbers or nulls");
  }
  return v;
}

Matrix matrix_from_json(const ordered_json& rows, const char* what) {
  if (!rows.is_array() || rows.empty())
    throw Error(Errc::Config, std::string(what) + " must be a nonempty array of rows");
  const std::size_t ncols = rows[0].is_array() ? rows[0].size() : 0;
  if (ncols == 0) throw Error(Errc::Config, std::string(what) + " rows must be nonempty arrays");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != ncols)
      throw Error(Errc::Config, std::string(what) + " rows must have equal length");
    for (std::size_t j = 0; j < ncols; ++j) {
      if (!rows[i][j].is_number())
        throw Error(Errc::Config, std::string(what) + " must hold numbers");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
  }
  return m;
}

ordered_json resolvent_to_json(const ResolventOp& op) {
  ordered_json j;
  ordered_json params = ordered_json::object();
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroResolvent>) {
          j["kind"] = "zero";
        } else if constexpr (std::is_same_v<K, L1Prox>) {
          j["kind"] = "l1_prox";
          params["weight"] = k.weight;
        } else if constexpr (std::is_same_v<K, BoxProjection>) {
          j["kind"] = "box_projection";
          params["lower"] = bound_to_json(k.lower);
          params["upper"] = bound_to_json(k.upper);
        } else if constexpr (std::is_same_v<K, HalfspaceProjection>) {
          j["kind"] = "halfspace_projection";
          params["normal"] = vector_to_json(k.normal);
          params["offset"] = k.offset;
        } else if constexpr (std::is_same_v<K, AffineResolvent>) {
          j["kind"] = "affine_resolvent";
          params["q"] = matrix_to_json(k.q);
          params["c"] = vector_to_json(k.c);
        } else {
          static_assert(std::is_same_v<K, SubdiffAbsSum>);
          j["kind"] = "subdiff_abs_sum";
        }
      },
      op.kind);
  j["params"] = std::move(params);
  return j;
}

ResolventOp resolvent_from_json(const ordered_json& j, Eigen::Index dim) {
  if (!j.contains("kind")) throw Error(Errc::Config, "resolvent entry needs a kind");
  const std::string kind = j["kind"].get<std::string>();
  const ordered_json params = j.value("params", ordered_json::object());
  if (kind == "zero") return zero_resolvent(dim);
  if (kind == "l1_prox") return l1_prox(dim, params.value("weight", 1.0));
  if (kind == "box_projection")
    return box_projection(bound_from_json(params.at("lower"), "box lower bound", -1.0),
                          bound_from_json(params.at("upper"), "box upper bound", 1.0));
  if (kind == "halfspace_projection")
    return halfspace_projection(vector_from_json(params.at("normal"), "half-space normal"),
                                params.value("offset", 0.0));
  if (kind == "affine_resolvent")
    return affine_resolvent(matrix_from_json(params.at("q"), "affine resolvent q"),
                            vector_from_json(params.at("c"), "affine resolvent c"));
  if (kind == "subdiff_abs_sum") return subdiff_abs_sum(dim);
  throw Error(Errc::Config, "unknown resolvent kind '" + kind + "'");
}

ordered_json forward_to_json(const ForwardOp& op) {
  ordered_json j;
  ordered_json params = ordered_json::object();
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroMap>) {
          j["kind"] = "zero_map";
        } else if constexpr (std::is_same_v<K, AffineMap>) {
          j["kind"] = "affine_map";
          params["m"] = matrix_to_json(k.m);
          params["c"] = vector_to_json(k.c);
        } else if constexpr (std::is_same_v<K, QuadGradient>) {
          j["kind"] = "quad_gradient";
          params["q"] = matrix_to_json(k.q);
          params["c"] = vector_to_json(k.c);
        } else if constexpr (std::is_same_v<K, SkewMap>) {
          j["kind"] = "skew_map";
          params["k"] = matrix_to_json(k.k);
        } else {
          static_assert(std::is_same_v<K, SaddleBilinear>);
          j["kind"] = "saddle_bilinear";
          params["p"] = matrix_to_json(k.p);
        }
      },
      op.kind);
  j["params"] = std::move(params);
  j["regularity"] =
      op.regularity == Regularity::Cocoercive ? "cocoercive" : "lipschitz_monotone";
  j["L"] = op.lipschitz;
  return j;
}

ForwardOp forward_from_json(const ordered_json& j, Eigen::Index dim) {
  if (!j.contains("kind")) throw Error(Errc::Config, "forward entry needs a kind");
  const std::string kind = j["kind"].get<std::string>();
  const ordered_json params = j.value("params", ordered_json::object());
  const std::string reg_str = j.value("regularity", std::string("cocoercive"));
  Regularity reg;
  if (reg_str == "cocoercive")
    reg = Regularity::Cocoercive;
  else if (reg_str == "lipschitz_monotone")
    reg = Regularity::LipschitzMonotone;
  else
    throw Error(Errc::Config, "unknown regularity '" + reg_str + "'");
  const double lipschitz = j.value("L", 0.0);

  if (kind == "zero_map") return zero_map(dim, reg);
  if (kind == "affine_map")
    return affine_map(matrix_from_json(params.at("m"), "affine map m"),
                      vector_from_json(params.at("c"), "affine map c"), reg, lipschitz);
  if (kind == "quad_gradient")
    return quad_gradient(matrix_from_json(params.at("q"), "quad gradient q"),
                         vector_from_json(params.at("c"), "quad gradient c"), lipschitz, reg);
  if (kind == "skew_map")
    return skew_map(matrix_from_json(params.at("k"), "skew map k"), lipschitz);
  if (kind == "saddle_bilinear")
    return saddle_bilinear(matrix_from_json(params.at("p"), "saddle coupling p"), lipschitz);
  throw Error(Errc::Config, "unknown forward kind '" + kind + "'");
}

}  // namespace

Mode mode_from_string(const std::string& s) {
  if (s == "cocoercive") return Mode::Cocoercive;
  if (s == "lipschitz") return Mode::Lipschitz;
  if (s == "mixed") return Mode::Mixed;
  throw Error(Errc::Config, "unknown mode '" + s + "'");
}

std::string problem_to_json(const ProblemSpec& spec) {
  ordered_json j;
  j["name"] = spec.name;
  j["dim"] = spec.instance.dim;
  j["mode"] = mode_name(spec.instance.mode);
  ordered_json resolvents = ordered_json::array();
  for (const ResolventOp& op : spec.instance.resolvents) resolvents.push_back(resolvent_to_json(op));
  j["resolvents"] = std::move(resolvents);
  ordered_json forwards = ordered_json::array();
  for (const ForwardOp& op : spec.instance.forwards) forwards.push_back(forward_to_json(op));
  j["forwards"] = std::move(forwards);
  if (spec.known_solution) j["known_solution"] = vector_to_json(*spec.known_solution);
  return j.dump(2);
}

ProblemSpec problem_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(Errc::Config, std::string("problem JSON parse failure: ") + e.what());
  }
  ProblemSpec spec;
  spec.name = j.value("name", std::string("problem"));
  if (!j.contains("dim") || !j.contains("mode") || !j.contains("resolvents"))
    throw Error(Errc::Config, "problem JSON needs dim, mode and resolvents");
  const Eigen::Index dim = j["dim"].get<Eigen::Index>();
  spec.instance.dim = dim;
  spec.instance.mode = mode_from_string(j["mode"].get<std::string>());
  for (const ordered_json& r : j["resolvents"])
    spec.instance.resolvents.push_back(resolvent_from_json(r, dim));
  spec.instance.n = static_cast<int>(spec.instance.resolvents.size());
  for (const ordered_json& f : j.value("forwards", ordered_json::array()))
    spec.instance.forwards.push_back(forward_from_json(f, dim));
  if (j.contains("known_solution"))
    spec.known_solution = vector_from_json(j["known_solution"], "known_solution");
  validate_instance(spec.instance);
  return spec;
}

ProblemSpec load_problem_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Config, "cannot read problem file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return problem_from_json(buf.str());
}

void save_problem_file(const std::string& path, const ProblemSpec& spec) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::Config, "cannot write problem file '" + path + "'");
  out << problem_to_json(spec) << '\n';
}

}  // namespace ringsplit
