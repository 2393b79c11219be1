#include "ringsplit/common.hpp"

namespace ringsplit {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::DimensionMismatch: return "dimension_mismatch";
    case Errc::NonFinite: return "non_finite";
    case Errc::InvalidParams: return "invalid_params";
    case Errc::InvalidProblem: return "invalid_problem";
    case Errc::InvalidCertificate: return "invalid_certificate";
    case Errc::Protocol: return "protocol";
    case Errc::MissingData: return "missing_data";
    case Errc::Config: return "config";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& msg)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

bool all_finite(const Vector& v) { return v.allFinite(); }
bool all_finite(const Matrix& m) { return m.allFinite(); }

void require_finite(const Vector& v, const char* what) {
  if (!all_finite(v)) throw Error(Errc::NonFinite, std::string(what) + " has non-finite entries");
}

void require_dim(const Vector& v, Eigen::Index dim, const char* what) {
  if (v.size() != dim)
    throw Error(Errc::DimensionMismatch, std::string(what) + " has dimension " +
                                             std::to_string(v.size()) + ", expected " +
                                             std::to_string(dim));
}

}  // namespace ringsplit
