#ifndef LPCERT_ERRORS_H_
#define LPCERT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace lpcert {

// Bad arguments: dimension mismatch, invalid norm, non-positive precision.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed model document or dataset file.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A size cap was hit (exact enumeration, clique count, DP grid).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lpcert

#endif  // LPCERT_ERRORS_H_
