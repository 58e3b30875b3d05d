#ifndef DDR_COMMON_HPP
#define DDR_COMMON_HPP

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ddr {

using Index = std::ptrdiff_t;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Raised on invalid input, failed invariants and numerical breakdown
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The three spaces of the discrete complex
enum class SpaceKind { Grad, Curl, Div };

inline std::string to_string(SpaceKind s) {
  switch (s) {
  case SpaceKind::Grad:
    return "grad";
  case SpaceKind::Curl:
    return "curl";
  case SpaceKind::Div:
    return "div";
  }
  return "?";
}

} // namespace ddr

#endif
