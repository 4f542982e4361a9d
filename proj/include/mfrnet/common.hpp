#pragma once

#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mfrnet {

// Shape of a dense 4-D tensor, batch x channels x height x width.
struct Shape {
  int n = 1;
  int c = 1;
  int h = 1;
  int w = 1;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  std::int64_t plane_size() const {
    return static_cast<std::int64_t>(h) * w;
  }
  bool operator==(const Shape&) const = default;

  std::string to_string() const {
    std::ostringstream os;
    os << n << "x" << c << "x" << h << "x" << w;
    return os.str();
  }
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

}  // namespace mfrnet
