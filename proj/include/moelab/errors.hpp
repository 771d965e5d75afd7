#ifndef MOELAB_ERRORS_HPP
#define MOELAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace moelab {

/// A value violated one of its structural invariants (non-Hermitian matrix,
/// non-unitary block in a channel file, ...).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation was called with arguments outside its domain.
class PreconditionError : public std::invalid_argument {
 public:
  explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw PreconditionError(msg);
}

}  // namespace detail
}  // namespace moelab

#endif  // MOELAB_ERRORS_HPP
