// Scalar reference implementations on nested std::vector, written without the
// tape or tensor types.
#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) out[i] += m[i][j] * x[j];
  return out;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline Vec softmax(const Vec& x) {
  double mx = x[0];
  for (double v : x) mx = v > mx ? v : mx;
  Vec e(x.size());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (e[i] = std::exp(x[i] - mx));
  for (double& v : e) v /= z;
  return e;
}

inline Vec weighted_rows(const Vec& w, const Mat& rows) {
  Vec out(rows[0].size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w[i] * rows[i][k];
  return out;
}

struct Cross {
  Mat eta;              // [n][m]
  Mat epsilon;          // [m][n]
  Mat attended_job;     // [n][d]
  Mat attended_resume;  // [m][d]
};

/// eta[l][k] ∝ exp(v1 · tanh(W1 r_l + U1 j_k)), epsilon[k][l] ∝
/// exp(v2 · tanh(W2 j_k + U2 r_l)).
inline Cross cross_attend(const Mat& req, const Mat& exp, const Mat& W1, const Mat& U1,
                          const Vec& v1, const Mat& W2, const Mat& U2, const Vec& v2) {
  const std::size_t m = req.size(), n = exp.size(), d = req[0].size();
  Cross c;
  for (std::size_t l = 0; l < n; ++l) {
    Vec scores(m);
    for (std::size_t k = 0; k < m; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double a = 0.0;
        for (std::size_t j = 0; j < d; ++j) a += W1[i][j] * exp[l][j] + U1[i][j] * req[k][j];
        s += v1[i] * std::tanh(a);
      }
      scores[k] = s;
    }
    c.eta.push_back(softmax(scores));
    c.attended_job.push_back(weighted_rows(c.eta.back(), req));
  }
  for (std::size_t k = 0; k < m; ++k) {
    Vec scores(n);
    for (std::size_t l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        double a = 0.0;
        for (std::size_t j = 0; j < d; ++j) a += W2[i][j] * req[k][j] + U2[i][j] * exp[l][j];
        s += v2[i] * std::tanh(a);
      }
      scores[l] = s;
    }
    c.epsilon.push_back(softmax(scores));
    c.attended_resume.push_back(weighted_rows(c.epsilon.back(), exp));
  }
  return c;
}

struct GgnnWeights {
  Mat H;
  Vec b;
  Mat Wz, Mz, Wr, Mr, Wh, Mh;
};

/// One gated step per entry of `steps`, node by node.
inline Mat ggnn(Mat G, const Mat& A, const std::vector<GgnnWeights>& steps) {
  const std::size_t N = G.size(), d = G[0].size();
  for (const auto& w : steps) {
    Mat msg(N);
    for (std::size_t u = 0; u < N; ++u) msg[u] = matvec(w.H, G[u]);
    Mat next(N, Vec(d));
    for (std::size_t v = 0; v < N; ++v) {
      Vec a = w.b;
      for (std::size_t u = 0; u < N; ++u)
        for (std::size_t k = 0; k < d; ++k) a[k] += A[v][u] * msg[u][k];
      Vec za = matvec(w.Wz, a), zg = matvec(w.Mz, G[v]);
      Vec ra = matvec(w.Wr, a), rg = matvec(w.Mr, G[v]);
      Vec rG(d);
      for (std::size_t k = 0; k < d; ++k) rG[k] = sig(ra[k] + rg[k]) * G[v][k];
      Vec ha = matvec(w.Wh, a), hg = matvec(w.Mh, rG);
      for (std::size_t k = 0; k < d; ++k) {
        const double z = sig(za[k] + zg[k]);
        next[v][k] = (1.0 - z) * G[v][k] + z * std::tanh(ha[k] + hg[k]);
      }
    }
    G = next;
  }
  return G;
}

struct SoftMapResult {
  Vec vector;
  Vec weights;
};

/// Σ_{i>=1} α_i g_i with α_i = v · σ(W g_i + c).
inline SoftMapResult soft_map(const Mat& states, const Vec& v, const Mat& W, const Vec& c,
                              bool normalize) {
  SoftMapResult r;
  const std::size_t d = states[0].size();
  if (states.size() < 2) {
    r.vector.assign(d, 0.0);
    return r;
  }
  for (std::size_t i = 1; i < states.size(); ++i) {
    Vec a = matvec(W, states[i]);
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += v[k] * sig(a[k] + c[k]);
    r.weights.push_back(s);
  }
  if (normalize) r.weights = softmax(r.weights);
  Mat related(states.begin() + 1, states.end());
  r.vector = weighted_rows(r.weights, related);
  return r;
}

/// σ(W_y tanh(W_d [j; r; j - r] + b_d) + b_y), clamped.
inline double predict(const Vec& job, const Vec& resume, const Mat& Wd, const Vec& bd,
                      const Vec& Wy, double by) {
  Vec f = job;
  f.insert(f.end(), resume.begin(), resume.end());
  for (std::size_t k = 0; k < job.size(); ++k) f.push_back(job[k] - resume[k]);
  double y = by;
  for (std::size_t i = 0; i < Wd.size(); ++i) {
    double h = bd[i];
    for (std::size_t k = 0; k < f.size(); ++k) h += Wd[i][k] * f[k];
    y += Wy[i] * std::tanh(h);
  }
  const double p = sig(y);
  return p < 1e-7 ? 1e-7 : (p > 1.0 - 1e-7 ? 1.0 - 1e-7 : p);
}

struct GruWeights {
  Mat Wz, Uz, Wr, Ur, Wh, Uh;
  Vec bz, br, bh;
};

/// Hidden states of a one-direction gated recurrent pass, in input order.
inline Mat gru(const Mat& xs, const GruWeights& w, bool reverse) {
  const std::size_t h = w.bz.size();
  Vec state(h, 0.0);
  Mat out(xs.size());
  for (std::size_t s = 0; s < xs.size(); ++s) {
    const std::size_t t = reverse ? xs.size() - 1 - s : s;
    Vec z(h), r(h), rh(h), next(h);
    for (std::size_t i = 0; i < h; ++i) {
      double az = w.bz[i], ar = w.br[i];
      for (std::size_t j = 0; j < xs[t].size(); ++j) {
        az += w.Wz[i][j] * xs[t][j];
        ar += w.Wr[i][j] * xs[t][j];
      }
      for (std::size_t j = 0; j < h; ++j) {
        az += w.Uz[i][j] * state[j];
        ar += w.Ur[i][j] * state[j];
      }
      z[i] = sig(az);
      r[i] = sig(ar);
    }
    for (std::size_t j = 0; j < h; ++j) rh[j] = r[j] * state[j];
    for (std::size_t i = 0; i < h; ++i) {
      double a = w.bh[i];
      for (std::size_t j = 0; j < xs[t].size(); ++j) a += w.Wh[i][j] * xs[t][j];
      for (std::size_t j = 0; j < h; ++j) a += w.Uh[i][j] * rh[j];
      next[i] = (1.0 - z[i]) * state[i] + z[i] * std::tanh(a);
    }
    state = next;
    out[t] = state;
  }
  return out;
}

}  // namespace oracle
