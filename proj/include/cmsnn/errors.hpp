#pragma once

#include <stdexcept>
#include <string>

namespace cmsnn {

// Dimension disagreement between operands. The message always reports both shapes.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated precondition (invalid argument, broken invariant, bad state).
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// IO and parsing failures; message carries path / line context.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string shape_str(int rows, int cols) {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

}  // namespace cmsnn
