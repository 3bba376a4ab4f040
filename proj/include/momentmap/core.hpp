#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace momentmap {

using Complex = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Index = Eigen::Index;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Grid steps: reference results were produced at 1e-4; CI-sized runs default
// to 1e-3, where every quadrature in this library is already converged far
// below the reported tolerances (the integrands are analytic and periodic).
inline constexpr double kFullDeltaTheta = 1e-4;
inline constexpr double kCiDeltaTheta = 1e-3;

inline constexpr const char* kToolVersion = "1.0.0";

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A parameter left the feasible cone: G*(e^{i theta}) Lambda G(e^{i theta})
// stopped being positive definite, or a factor has a determinantal root on
// the unit circle (CLI exit code 2). Carries the offending angle.
class FeasibilityError : public Error {
 public:
  FeasibilityError(const std::string& msg, double theta) : Error(msg), theta_(theta) {}
  double theta() const { return theta_; }

 private:
  double theta_ = 0.0;
};

// Numerical breakdown: divergence, loss of finiteness, failed factorization
// (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// A pointwise solve became (nearly) singular; carries the grid angle.
class SingularityError : public NumericalError {
 public:
  SingularityError(const std::string& msg, double theta) : NumericalError(msg), theta_(theta) {}
  double theta() const { return theta_; }

 private:
  double theta_ = 0.0;
};

// A matrix does not have the rank a reduction step requires.
class RankError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline ComplexMatrix hermitian_part(const ComplexMatrix& x) { return 0.5 * (x + x.adjoint()); }

inline RealMatrix symmetric_part(const RealMatrix& x) { return 0.5 * (x + x.transpose()); }

// trace(a b), the inner product used on symmetric matrices throughout.
inline double trace_inner(const RealMatrix& a, const RealMatrix& b) {
  return a.transpose().cwiseProduct(b).sum();
}

// trace(a b) for complex factors (no conjugation; plain product trace).
inline Complex trace_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  return a.transpose().cwiseProduct(b).sum();
}

}  // namespace momentmap
