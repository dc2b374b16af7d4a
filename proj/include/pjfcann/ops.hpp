// Differentiable primitives. Every op validates shapes up front, computes the
// forward value, and records a backward closure on the operands' tape.
#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pjfcann/autodiff.hpp"

namespace pjfcann::ops {

namespace detail {

inline Tape& tape_of(const Var& a, const Var& b, const char* op) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw std::invalid_argument(std::string(op) +
                                ": operands live on different tapes");
  }
  return *a.tape;
}

inline void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " +
                     shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

inline void accumulate(Tape& t, std::size_t id, const Tensor& g) {
  if (!t.requires_grad(id)) return;
  Tensor& dst = t.grad(id);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

// Leading extent and last-axis width of a tensor viewed as [lead x last].
inline std::pair<std::size_t, std::size_t> lead_last(const Shape& s) {
  if (s.empty()) return {1, 1};
  return {shape_size(s) / s.back(), s.back()};
}

}  // namespace detail

/// [m x k]·[k x n] -> [m x n], [m x k]·[k] -> [m], [k]·[k x n] -> [n],
/// [k]·[k] -> scalar.
inline Var matmul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b, "matmul");
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  const std::size_t ra = A.rank(), rb = B.rank();
  if (ra < 1 || ra > 2 || rb < 1 || rb > 2 || A.shape[ra - 1] != B.shape[0]) {
    throw ShapeError("matmul: shape mismatch " + shape_string(A.shape) +
                     " vs " + shape_string(B.shape));
  }
  const std::size_t m = ra == 2 ? A.shape[0] : 1;
  const std::size_t k = A.shape[ra - 1];
  const std::size_t n = rb == 2 ? B.shape[1] : 1;
  Shape out_shape;
  if (ra == 2) out_shape.push_back(m);
  if (rb == 2) out_shape.push_back(n);
  Tensor out(out_shape);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = A.data.data() + i * k;
    double* orow = out.data.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = B.data.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpKind::kMatMul, std::move(out), {ia, ib},
                  [ia, ib, m, k, n](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    if (tp.requires_grad(ia)) {
                      const Tensor& Bv = tp.value(ib);
                      Tensor& dA = tp.grad(ia);
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          double s = 0.0;
                          for (std::size_t j = 0; j < n; ++j) {
                            s += G[i * n + j] * Bv[p * n + j];
                          }
                          dA[i * k + p] += s;
                        }
                      }
                    }
                    if (tp.requires_grad(ib)) {
                      const Tensor& Av = tp.value(ia);
                      Tensor& dB = tp.grad(ib);
                      for (std::size_t i = 0; i < m; ++i) {
                        for (std::size_t p = 0; p < k; ++p) {
                          const double av = Av[i * k + p];
                          for (std::size_t j = 0; j < n; ++j) {
                            dB[p * n + j] += av * G[i * n + j];
                          }
                        }
                      }
                    }
                  });
}

inline Var add(Var a, Var b) {
  Tape& t = detail::tape_of(a, b, "add");
  detail::require_same_shape(a, b, "add");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += B[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpKind::kAdd, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    detail::accumulate(tp, ia, G);
                    detail::accumulate(tp, ib, G);
                  });
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::tape_of(a, b, "sub");
  detail::require_same_shape(a, b, "sub");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= B[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpKind::kSub, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    detail::accumulate(tp, ia, G);
                    if (tp.requires_grad(ib)) {
                      Tensor& d = tp.grad(ib);
                      for (std::size_t i = 0; i < G.size(); ++i) d[i] -= G[i];
                    }
                  });
}

inline Var mul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b, "mul");
  detail::require_same_shape(a, b, "mul");
  Tensor out = a.value();
  const Tensor& B = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= B[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.record(OpKind::kMul, std::move(out), {ia, ib},
                  [ia, ib](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    if (tp.requires_grad(ia)) {
                      const Tensor& Bv = tp.value(ib);
                      Tensor& d = tp.grad(ia);
                      for (std::size_t i = 0; i < G.size(); ++i)
                        d[i] += G[i] * Bv[i];
                    }
                    if (tp.requires_grad(ib)) {
                      const Tensor& Av = tp.value(ia);
                      Tensor& d = tp.grad(ib);
                      for (std::size_t i = 0; i < G.size(); ++i)
                        d[i] += G[i] * Av[i];
                    }
                  });
}

inline Var scale(Var x, double c) {
  Tensor out = x.value();
  for (double& v : out.data) v *= c;
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kScale, std::move(out), {ix},
                        [ix, c](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < G.size(); ++i)
                            d[i] += c * G[i];
                        });
}

/// x [... x n] + bias [n], broadcast over all leading axes.
inline Var add_bias(Var x, Var bias) {
  Tape& t = detail::tape_of(x, bias, "add_bias");
  const auto [lead, last] = detail::lead_last(x.shape());
  if (bias.value().rank() != 1 || bias.value().size() != last ||
      x.value().rank() == 0) {
    throw ShapeError("add_bias: shape mismatch " + shape_string(x.shape()) +
                     " vs " + shape_string(bias.shape()));
  }
  Tensor out = x.value();
  const Tensor& b = bias.value();
  for (std::size_t r = 0; r < lead; ++r)
    for (std::size_t j = 0; j < last; ++j) out[r * last + j] += b[j];
  const std::size_t ix = x.id, ib = bias.id;
  const std::size_t L = lead, N = last;
  return t.record(OpKind::kAddBias, std::move(out), {ix, ib},
                  [ix, ib, L, N](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    detail::accumulate(tp, ix, G);
                    if (tp.requires_grad(ib)) {
                      Tensor& d = tp.grad(ib);
                      for (std::size_t r = 0; r < L; ++r)
                        for (std::size_t j = 0; j < N; ++j)
                          d[j] += G[r * N + j];
                    }
                  });
}

inline Var tanh(Var x) {
  Tensor out = x.value();
  for (double& v : out.data) v = std::tanh(v);
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kTanh, std::move(out), {ix},
                        [ix](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          const Tensor& y = tp.value(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < G.size(); ++i)
                            d[i] += G[i] * (1.0 - y[i] * y[i]);
                        });
}

inline double sigmoid_scalar(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

inline Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data) v = sigmoid_scalar(v);
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kSigmoid, std::move(out), {ix},
                        [ix](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          const Tensor& y = tp.value(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < G.size(); ++i)
                            d[i] += G[i] * y[i] * (1.0 - y[i]);
                        });
}

/// Softmax over the last axis, max-subtracted.
inline Var softmax(Var x) {
  if (x.value().rank() == 0) {
    throw ShapeError("softmax: needs at least one axis, got " +
                     shape_string(x.shape()));
  }
  const auto [lead, last] = detail::lead_last(x.shape());
  Tensor out = x.value();
  for (std::size_t r = 0; r < lead; ++r) {
    double* row = out.data.data() + r * last;
    const double mx = *std::max_element(row, row + last);
    double z = 0.0;
    for (std::size_t j = 0; j < last; ++j) {
      row[j] = std::exp(row[j] - mx);
      z += row[j];
    }
    for (std::size_t j = 0; j < last; ++j) row[j] /= z;
  }
  const std::size_t ix = x.id;
  const std::size_t L = lead, N = last;
  return x.tape->record(OpKind::kSoftmax, std::move(out), {ix},
                        [ix, L, N](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          const Tensor& y = tp.value(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t r = 0; r < L; ++r) {
                            double dot = 0.0;
                            for (std::size_t j = 0; j < N; ++j)
                              dot += G[r * N + j] * y[r * N + j];
                            for (std::size_t j = 0; j < N; ++j)
                              d[r * N + j] += y[r * N + j] * (G[r * N + j] - dot);
                          }
                        });
}

/// Concatenate along the last axis; all leading axes must agree.
inline Var concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  Tape& t = *parts.front().tape;
  const Shape& first = parts.front().shape();
  if (first.empty()) throw ShapeError("concat: scalar input");
  Shape lead_shape(first.begin(), first.end() - 1);
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.tape != &t) throw std::invalid_argument("concat: mixed tapes");
    const Shape& s = p.shape();
    if (s.size() != first.size() ||
        !std::equal(lead_shape.begin(), lead_shape.end(), s.begin())) {
      throw ShapeError("concat: shape mismatch " + shape_string(first) +
                       " vs " + shape_string(s));
    }
    widths.push_back(s.back());
    ids.push_back(p.id);
    total += s.back();
  }
  const std::size_t lead = shape_size(lead_shape);
  Shape out_shape = lead_shape;
  out_shape.push_back(total);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    for (std::size_t r = 0; r < lead; ++r)
      for (std::size_t j = 0; j < widths[k]; ++j)
        out[r * total + offset + j] = v[r * widths[k] + j];
    offset += widths[k];
  }
  return t.record(OpKind::kConcat, std::move(out), ids,
                  [ids, widths, lead, total](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    std::size_t off = 0;
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (tp.requires_grad(ids[k])) {
                        Tensor& d = tp.grad(ids[k]);
                        for (std::size_t r = 0; r < lead; ++r)
                          for (std::size_t j = 0; j < widths[k]; ++j)
                            d[r * widths[k] + j] += G[r * total + off + j];
                      }
                      off += widths[k];
                    }
                  });
}

/// Columns [offset, offset + width) of the last axis.
inline Var slice(Var x, std::size_t offset, std::size_t width) {
  const Shape& s = x.shape();
  if (s.empty() || width == 0 || offset + width > s.back()) {
    throw ShapeError("slice: range [" + std::to_string(offset) + ", " +
                     std::to_string(offset + width) + ") outside " +
                     shape_string(s));
  }
  const auto [lead, last] = detail::lead_last(s);
  Shape out_shape = s;
  out_shape.back() = width;
  Tensor out(out_shape);
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < lead; ++r)
    for (std::size_t j = 0; j < width; ++j)
      out[r * width + j] = v[r * last + offset + j];
  const std::size_t ix = x.id;
  const std::size_t L = lead, N = last;
  return x.tape->record(OpKind::kSlice, std::move(out), {ix},
                        [ix, L, N, offset, width](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t r = 0; r < L; ++r)
                            for (std::size_t j = 0; j < width; ++j)
                              d[r * N + offset + j] += G[r * width + j];
                        });
}

/// Inverse of concat for the given last-axis widths.
inline std::vector<Var> split(Var x, const std::vector<std::size_t>& widths) {
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  if (x.shape().empty() || total != x.shape().back()) {
    throw ShapeError("split: widths do not cover " + shape_string(x.shape()));
  }
  std::vector<Var> out;
  std::size_t offset = 0;
  for (std::size_t w : widths) {
    out.push_back(slice(x, offset, w));
    offset += w;
  }
  return out;
}

inline Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kSum, Tensor::scalar(s), {ix},
                        [ix](Tape& tp, std::size_t self) {
                          const double g = tp.grad(self)[0];
                          Tensor& d = tp.grad(ix);
                          for (double& v : d.data) v += g;
                        });
}

inline Var mean(Var x) {
  const double n = static_cast<double>(x.size());
  double s = 0.0;
  for (double v : x.value().data) s += v;
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kMean, Tensor::scalar(s / n), {ix},
                        [ix, n](Tape& tp, std::size_t self) {
                          const double g = tp.grad(self)[0] / n;
                          Tensor& d = tp.grad(ix);
                          for (double& v : d.data) v += g;
                        });
}

/// Sum over axis 0.
inline Var sum_rows(Var x) {
  const Shape& s = x.shape();
  if (s.empty()) throw ShapeError("sum_rows: scalar input");
  const std::size_t rows = s[0];
  Shape out_shape(s.begin() + 1, s.end());
  const std::size_t width = shape_size(out_shape);
  Tensor out(out_shape);
  const Tensor& v = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < width; ++j) out[j] += v[r * width + j];
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kSumRows, std::move(out), {ix},
                        [ix, rows, width](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t r = 0; r < rows; ++r)
                            for (std::size_t j = 0; j < width; ++j)
                              d[r * width + j] += G[j];
                        });
}

inline Var transpose(Var x) {
  const Tensor& v = x.value();
  if (v.rank() != 2) {
    throw ShapeError("transpose: needs a matrix, got " +
                     shape_string(v.shape));
  }
  const std::size_t r = v.shape[0], c = v.shape[1];
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = v[i * c + j];
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kTranspose, std::move(out), {ix},
                        [ix, r, c](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < r; ++i)
                            for (std::size_t j = 0; j < c; ++j)
                              d[i * c + j] += G[j * r + i];
                        });
}

/// Rows of `table` selected by `indices` (axis 0, repeats allowed). With
/// `zero_index_is_padding`, index 0 yields a zero row that receives no
/// gradient.
inline Var gather_rows(Var table, const std::vector<std::size_t>& indices,
                       bool zero_index_is_padding = false) {
  const Shape& s = table.shape();
  if (s.empty()) throw ShapeError("gather_rows: scalar table");
  if (indices.empty()) throw ShapeError("gather_rows: no indices");
  const std::size_t rows = s[0];
  const std::size_t width = shape_size(s) / rows;
  for (std::size_t idx : indices) {
    if (idx >= rows) {
      throw std::out_of_range("gather_rows: index " + std::to_string(idx) +
                              " out of range for " + shape_string(s));
    }
  }
  Shape out_shape = s;
  out_shape[0] = indices.size();
  Tensor out(out_shape);
  const Tensor& v = table.value();
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (zero_index_is_padding && indices[r] == 0) continue;
    std::copy_n(v.data.begin() + indices[r] * width, width,
                out.data.begin() + r * width);
  }
  const std::size_t ix = table.id;
  return table.tape->record(
      OpKind::kGatherRows, std::move(out), {ix},
      [ix, indices, width, zero_index_is_padding](Tape& tp, std::size_t self) {
        const Tensor& G = tp.grad(self);
        Tensor& d = tp.grad(ix);
        for (std::size_t r = 0; r < indices.size(); ++r) {
          if (zero_index_is_padding && indices[r] == 0) continue;
          for (std::size_t j = 0; j < width; ++j)
            d[indices[r] * width + j] += G[r * width + j];
        }
      });
}

/// Inverted dropout: keeps each unit with probability 1 - p and rescales by
/// 1 / (1 - p). Identity when not training or p == 0.
inline Var dropout(Var x, double p, bool training, std::mt19937_64& rng) {
  if (!training || p <= 0.0) return x;
  if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
  x.tape->mark_stochastic();
  std::bernoulli_distribution keep(1.0 - p);
  const double s = 1.0 / (1.0 - p);
  Tensor mask(x.shape());
  for (double& m : mask.data) m = keep(rng) ? s : 0.0;
  Tensor out = x.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kDropout, std::move(out), {ix},
                        [ix, mask](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < G.size(); ++i)
                            d[i] += G[i] * mask[i];
                        });
}

/// Entry i along axis 0.
inline Var row(Var x, std::size_t i) {
  const Shape& s = x.shape();
  if (s.empty() || i >= s[0]) {
    throw ShapeError("row: index " + std::to_string(i) + " outside " +
                     shape_string(s));
  }
  Shape out_shape(s.begin() + 1, s.end());
  const std::size_t width = shape_size(out_shape);
  const Tensor& v = x.value();
  Tensor out(out_shape, std::vector<double>(v.data.begin() + i * width,
                                            v.data.begin() + (i + 1) * width));
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kRow, std::move(out), {ix},
                        [ix, i, width](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t j = 0; j < width; ++j)
                            d[i * width + j] += G[j];
                        });
}

/// Stack equally shaped tensors along a new leading axis.
inline Var stack(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("stack: no inputs");
  Tape& t = *parts.front().tape;
  const Shape& s = parts.front().shape();
  const std::size_t width = shape_size(s);
  std::vector<std::size_t> ids;
  Shape out_shape{parts.size()};
  out_shape.insert(out_shape.end(), s.begin(), s.end());
  Tensor out(out_shape);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    if (parts[k].tape != &t) throw std::invalid_argument("stack: mixed tapes");
    if (parts[k].shape() != s) {
      throw ShapeError("stack: shape mismatch " + shape_string(s) + " vs " +
                       shape_string(parts[k].shape()));
    }
    std::copy_n(parts[k].value().data.begin(), width,
                out.data.begin() + k * width);
    ids.push_back(parts[k].id);
  }
  return t.record(OpKind::kStack, std::move(out), ids,
                  [ids, width](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    for (std::size_t k = 0; k < ids.size(); ++k) {
                      if (!tp.requires_grad(ids[k])) continue;
                      Tensor& d = tp.grad(ids[k]);
                      for (std::size_t j = 0; j < width; ++j)
                        d[j] += G[k * width + j];
                    }
                  });
}

inline Var reshape(Var x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape: " + shape_string(x.shape()) + " to " +
                     shape_string(shape));
  }
  Tensor out(std::move(shape), x.value().data);
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kReshape, std::move(out), {ix},
                        [ix](Tape& tp, std::size_t self) {
                          detail::accumulate(tp, ix, tp.grad(self));
                        });
}

/// (1 - z) ⊙ prev + z ⊙ candidate: the interpolation shared by GRU and GGNN
/// updates.
inline Var gated_blend(Var z, Var prev, Var candidate) {
  Tape& t = detail::tape_of(z, prev, "gated_blend");
  detail::tape_of(z, candidate, "gated_blend");
  detail::require_same_shape(z, prev, "gated_blend");
  detail::require_same_shape(z, candidate, "gated_blend");
  const Tensor& Z = z.value();
  const Tensor& P = prev.value();
  const Tensor& C = candidate.value();
  Tensor out(Z.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (1.0 - Z[i]) * P[i] + Z[i] * C[i];
  const std::size_t iz = z.id, ip = prev.id, ic = candidate.id;
  return t.record(OpKind::kGatedBlend, std::move(out), {iz, ip, ic},
                  [iz, ip, ic](Tape& tp, std::size_t self) {
                    const Tensor& G = tp.grad(self);
                    const Tensor& Zv = tp.value(iz);
                    if (tp.requires_grad(iz)) {
                      const Tensor& Pv = tp.value(ip);
                      const Tensor& Cv = tp.value(ic);
                      Tensor& d = tp.grad(iz);
                      for (std::size_t i = 0; i < G.size(); ++i)
                        d[i] += G[i] * (Cv[i] - Pv[i]);
                    }
                    if (tp.requires_grad(ip)) {
                      Tensor& d = tp.grad(ip);
                      for (std::size_t i = 0; i < G.size(); ++i)
                        d[i] += G[i] * (1.0 - Zv[i]);
                    }
                    if (tp.requires_grad(ic)) {
                      Tensor& d = tp.grad(ic);
                      for (std::size_t i = 0; i < G.size(); ++i)
                        d[i] += G[i] * Zv[i];
                    }
                  });
}

/// Elementwise clamp; gradient passes only where the input is inside the
/// interval.
inline Var clamp(Var x, double lo, double hi) {
  Tensor out = x.value();
  for (double& v : out.data) v = std::clamp(v, lo, hi);
  const std::size_t ix = x.id;
  return x.tape->record(OpKind::kClamp, std::move(out), {ix},
                        [ix, lo, hi](Tape& tp, std::size_t self) {
                          const Tensor& G = tp.grad(self);
                          const Tensor& in = tp.value(ix);
                          Tensor& d = tp.grad(ix);
                          for (std::size_t i = 0; i < G.size(); ++i)
                            if (in[i] >= lo && in[i] <= hi) d[i] += G[i];
                        });
}

inline constexpr double kBceEpsilon = 1e-7;

/// Mean binary cross-entropy of predictions against 0/1 labels.
/// Predictions are clamped to [eps, 1 - eps].
inline Var bce(Var predictions, const std::vector<double>& labels) {
  const Tensor& p = predictions.value();
  if (p.size() != labels.size()) {
    throw ShapeError("bce: " + std::to_string(p.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  for (double y : labels) {
    if (y != 0.0 && y != 1.0) {
      throw std::invalid_argument("bce: label " + std::to_string(y) +
                                  " outside {0, 1}");
    }
  }
  const double n = static_cast<double>(labels.size());
  double loss = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], kBceEpsilon, 1.0 - kBceEpsilon);
    loss -= labels[i] * std::log(q) + (1.0 - labels[i]) * std::log(1.0 - q);
  }
  const std::size_t ip = predictions.id;
  return predictions.tape->record(
      OpKind::kBce, Tensor::scalar(loss / n), {ip},
      [ip, labels, n](Tape& tp, std::size_t self) {
        const double g = tp.grad(self)[0];
        const Tensor& pv = tp.value(ip);
        Tensor& d = tp.grad(ip);
        for (std::size_t i = 0; i < labels.size(); ++i) {
          const double q = pv[i];
          if (q < kBceEpsilon || q > 1.0 - kBceEpsilon) continue;
          d[i] += g * (-labels[i] / q + (1.0 - labels[i]) / (1.0 - q)) / n;
        }
      });
}

/// Cosine similarity of two vectors; 0 (with zero gradient) if either is
/// the zero vector.
inline Var cosine(Var a, Var b) {
  Tape& t = detail::tape_of(a, b, "cosine");
  detail::require_same_shape(a, b, "cosine");
  if (a.value().rank() != 1) {
    throw ShapeError("cosine: needs vectors, got " + shape_string(a.shape()));
  }
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < A.size(); ++i) {
    dot += A[i] * B[i];
    na += A[i] * A[i];
    nb += B[i] * B[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  const bool degenerate = na == 0.0 || nb == 0.0;
  const double c = degenerate ? 0.0 : dot / (na * nb);
  const std::size_t ia = a.id, ib = b.id;
  return t.record(
      OpKind::kCosine, Tensor::scalar(c), {ia, ib},
      [ia, ib, na, nb, c, degenerate](Tape& tp, std::size_t self) {
        if (degenerate) return;
        const double g = tp.grad(self)[0];
        const Tensor& Av = tp.value(ia);
        const Tensor& Bv = tp.value(ib);
        if (tp.requires_grad(ia)) {
          Tensor& d = tp.grad(ia);
          for (std::size_t i = 0; i < Av.size(); ++i)
            d[i] += g * (Bv[i] / (na * nb) - c * Av[i] / (na * na));
        }
        if (tp.requires_grad(ib)) {
          Tensor& d = tp.grad(ib);
          for (std::size_t i = 0; i < Bv.size(); ++i)
            d[i] += g * (Av[i] / (na * nb) - c * Bv[i] / (nb * nb));
        }
      });
}

// Convenience wrappers used throughout the model code.

/// x · Wᵀ for a stacked batch x [rows x in] and W [out x in], or W·x for a
/// vector x [in].
inline Var linear(Var x, Var weight) {
  if (x.value().rank() == 1) return matmul(weight, x);
  return matmul(x, transpose(weight));
}

inline Var linear(Var x, Var weight, Var bias) {
  return add_bias(linear(x, weight), bias);
}

}  // namespace pjfcann::ops
