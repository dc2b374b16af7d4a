// Dense row-major tensor value type.
#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pjfcann {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Plain n-dimensional array of doubles. A Tensor on its own is detached:
/// it only participates in differentiation once placed on a Tape.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), data(shape_size(shape), fill) {
    check_dims();
  }
  Tensor(Shape s, std::vector<double> values)
      : shape(std::move(s)), data(std::move(values)) {
    check_dims();
    if (shape_size(shape) != data.size()) {
      throw ShapeError("tensor: shape " + shape_string(shape) + " holds " +
                       std::to_string(shape_size(shape)) + " values, got " +
                       std::to_string(data.size()));
    }
  }

  static Tensor scalar(double v) { return Tensor(Shape{}, {v}); }
  static Tensor vector(std::vector<double> v) {
    const std::size_t n = v.size();
    return Tensor({n}, std::move(v));
  }
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<double> v) {
    return Tensor({rows, cols}, std::move(v));
  }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
  bool empty() const { return data.empty(); }

  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data[r * shape[1] + c];
  }
  double item() const {
    if (data.size() != 1) {
      throw ShapeError("item: tensor " + shape_string(shape) +
                       " is not a scalar");
    }
    return data[0];
  }

  /// Row i along axis 0 as a copy.
  Tensor row(std::size_t i) const {
    Shape sub(shape.begin() + 1, shape.end());
    const std::size_t n = shape_size(sub);
    return Tensor(sub, std::vector<double>(data.begin() + i * n,
                                           data.begin() + (i + 1) * n));
  }

 private:
  void check_dims() const {
    for (std::size_t d : shape) {
      if (d == 0) {
        throw ShapeError("tensor: zero-sized dimension in " +
                         shape_string(shape));
      }
    }
  }
};

}  // namespace pjfcann
