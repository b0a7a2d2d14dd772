#include "starmm/common.hpp"

#include <cmath>

namespace starmm {

namespace {

double diag_scale(const MatR& a) {
  if (a.rows() == 0) return 1.0;
  double s = a.diagonal().cwiseAbs().mean();
  return s > 0 ? s : 1.0;
}

}  // namespace

double logdet_spd(MatR a, const char* label) {
  const Eigen::Index n = a.rows();
  if (n == 0) return 0.0;
  double jitter = 1e-10 * diag_scale(a);
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<MatR> llt(a);
    if (llt.info() == Eigen::Success) {
      MatR l = llt.matrixL();
      return 2.0 * l.diagonal().array().log().sum();
    }
    a.diagonal().array() += jitter;
    jitter *= 100.0;
  }
  throw NumericsError(std::string("logdet_spd: ") + label + " is not positive definite");
}

MatR inverse_spd(MatR a, const char* label) {
  const Eigen::Index n = a.rows();
  MatR eye = MatR::Identity(n, n);
  double jitter = 1e-10 * diag_scale(a);
  for (int attempt = 0; attempt < 6; ++attempt) {
    Eigen::LLT<MatR> llt(a);
    if (llt.info() == Eigen::Success) return llt.solve(eye);
    a.diagonal().array() += jitter;
    jitter *= 100.0;
  }
  throw NumericsError(std::string("inverse_spd: ") + label + " is not positive definite");
}

void require_finite(const MatC& m, const char* label) {
  if (!m.allFinite()) throw NumericsError(std::string(label) + " has non-finite entries");
}

void require_finite(const MatR& m, const char* label) {
  if (!m.allFinite()) throw NumericsError(std::string(label) + " has non-finite entries");
}

}  // namespace starmm
