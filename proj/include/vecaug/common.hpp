#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vecaug {

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using VecF = Vec<float>;

/// Invalid user-provided data (bad tokens, empty sequences, infeasible configs).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed on-disk artifact (bad magic, truncation).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation invoked in a state that does not support it.
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Insertion conflicting with an existing record.
struct ConflictError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not conform to an operation's contract.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numeric failure (NaN gradients, diverged loss).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Stable sub-seed derivation: all randomness flows from one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(splitmix64(master) ^ splitmix64(stream * 0xd1342543de82ef95ull + 1));
}

}  // namespace vecaug
