#ifndef DEQ_CORE_HPP
#define DEQ_CORE_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace deq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// All numerics are double throughout: the coupling gaps under study are
// O(m^{-1/4}) and would drown in single-precision noise.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidConfig : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };

// Well-posedness loss: the contraction guard gamma*||A|| < 1 failed.
struct NonContractive : Error { using Error::Error; };
struct MaxIterExceeded : Error { using Error::Error; };
struct PreconditionViolated : Error { using Error::Error; };
struct SingularBlock : Error { using Error::Error; };
struct SizeGuard : Error { using Error::Error; };
struct SchemeMismatch : Error { using Error::Error; };
struct NonUnitRows : Error { using Error::Error; };
struct StepRejected : Error { using Error::Error; };

// Kernel matrix not invertible above the eigenvalue floor. Carries the
// offending eigenvalues so reports can list them instead of a blown-up number.
struct SingularKernel : Error {
  SingularKernel(const std::string& msg, std::vector<double> offending)
      : Error(msg), offending_eigenvalues(std::move(offending)) {}
  std::vector<double> offending_eigenvalues;
};

// Dataset file errors.
struct BadMagic : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };
struct ClassNotPresent : Error { using Error::Error; };

}  // namespace deq

#endif  // DEQ_CORE_HPP
