// Conversions between library tensors and the oracle's nested vectors.
#pragma once

#include <random>

#include "oracle.hpp"
#include "pjfcann/parameter.hpp"
#include "pjfcann/tensor.hpp"

namespace helpers {

inline oracle::Mat to_mat(const pjfcann::Tensor& t) {
  oracle::Mat m(t.rows(), oracle::Vec(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

inline oracle::Vec to_vec(const pjfcann::Tensor& t) { return t.data; }

inline oracle::Mat to_mat(const pjfcann::Parameter* p) { return to_mat(p->value); }
inline oracle::Vec to_vec(const pjfcann::Parameter* p) { return p->value.data; }

inline pjfcann::Tensor from_mat(const oracle::Mat& m) {
  pjfcann::Tensor t({m.size(), m[0].size()});
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) t.at(i, j) = m[i][j];
  return t;
}

inline pjfcann::Tensor random_tensor(pjfcann::Shape shape, std::mt19937_64& rng,
                                     double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  pjfcann::Tensor t(std::move(shape));
  for (double& x : t.data) x = u(rng);
  return t;
}

inline double max_abs_diff(const oracle::Vec& a, const oracle::Vec& b) {
  double m = a.size() == b.size() ? 0.0 : 1e300;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs_diff(const oracle::Mat& a, const oracle::Mat& b) {
  double m = a.size() == b.size() ? 0.0 : 1e300;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, max_abs_diff(a[i], b[i]));
  return m;
}

}  // namespace helpers
