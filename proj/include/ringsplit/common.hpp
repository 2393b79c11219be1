#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace ringsplit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Errc {
  DimensionMismatch,
  NonFinite,
  InvalidParams,
  InvalidProblem,
  InvalidCertificate,
  Protocol,
  MissingData,
  Config,
};

const char* errc_name(Errc code);

/// Library error carrying a machine-checkable code plus a human message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg);
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

bool all_finite(const Vector& v);
bool all_finite(const Matrix& m);
void require_finite(const Vector& v, const char* what);
void require_dim(const Vector& v, Eigen::Index dim, const char* what);

}  // namespace ringsplit
