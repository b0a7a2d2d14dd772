#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace starmm {

using Cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;

inline constexpr double kLn2 = 0.6931471805599453094;

/// Dimension or shape mismatch; message names the offending matrix.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericsError : public std::runtime_error {
 public:
  explicit NumericsError(const std::string& msg) : std::runtime_error(msg) {}
};

inline MatR symmetrize(const MatR& m) { return 0.5 * (m + m.transpose()); }

/// log(det(a)) for a symmetric positive definite matrix via Cholesky.
/// Adds escalating diagonal jitter (starting at 1e-10 relative to the mean
/// diagonal) if the factorization fails; throws NumericsError when the matrix
/// stays indefinite.
double logdet_spd(MatR a, const char* label = "matrix");

/// a^{-1} for symmetric positive definite a, same jitter policy as logdet_spd.
MatR inverse_spd(MatR a, const char* label = "matrix");

void require_finite(const MatC& m, const char* label);
void require_finite(const MatR& m, const char* label);

}  // namespace starmm
