#pragma once

// Reference implementations used only by the tests. They are written for
// clarity, not speed, and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "llm3dti/numkit.hpp"
#include "llm3dti/random.hpp"

namespace oracle {

using llm3dti::Matrix;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      c(i, j) = acc;
    }
  return c;
}

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.rows();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a(r, col)) > std::abs(a(pivot, col))) pivot = r;
    if (a(pivot, col) == 0.0) throw std::runtime_error("singular system");
    if (pivot != col) {
      for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(pivot, c));
      std::swap(b[col], b[pivot]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a(r, col) / a(col, col);
      if (f == 0.0) continue;
      for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a(i, c) * x[c];
    x[i] = acc / a(i, i);
  }
  return x;
}

// Column-normalized walk matrix with self-loops on isolated nodes.
inline Matrix column_stochastic(const Matrix& adj) {
  const std::size_t n = adj.rows();
  Matrix w(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double deg = 0.0;
    for (std::size_t i = 0; i < n; ++i) deg += adj(i, j);
    if (deg == 0.0) {
      w(j, j) = 1.0;
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) w(i, j) = adj(i, j) / deg;
  }
  return w;
}

// Stationary RWR distribution from start node j: r·(I − (1−r)W)⁻¹ e_j.
inline std::vector<double> rwr_direct(const Matrix& adj, std::size_t j, double restart) {
  const std::size_t n = adj.rows();
  const Matrix w = column_stochastic(adj);
  Matrix m(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) m(r, c) = (r == c ? 1.0 : 0.0) - (1.0 - restart) * w(r, c);
  std::vector<double> e(n, 0.0);
  e[j] = restart;
  return solve(m, e);
}

// Area under the ROC polyline through every distinct-threshold point.
inline double trapezoid_auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0, neg = 0;
  for (int y : labels) (y == 1 ? pos : neg) += 1;
  double area = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (labels[i] == 1 ? tp : fp) += 1;
    const double tpr = tp / pos, fpr = fp / neg;
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_tpr = tpr;
    prev_fpr = fpr;
  }
  return area;
}

// Enumerates every candidate threshold independently and accumulates
// (recall_k − recall_{k−1}) · precision_k.
inline double exhaustive_aupr(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> thresholds(scores);
  std::sort(thresholds.begin(), thresholds.end(), std::greater<>());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  double pos = 0;
  for (int y : labels) pos += y;
  double area = 0.0, prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < scores.size(); ++i)
      if (scores[i] >= t) (labels[i] == 1 ? tp : fp) += 1;
    const double recall = tp / pos;
    area += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
  }
  return area;
}

// Student t density.
inline double t_pdf(double x, double df) {
  const double c = std::exp(std::lgamma((df + 1) / 2) - std::lgamma(df / 2)) / std::sqrt(df * M_PI);
  return c * std::pow(1.0 + x * x / df, -(df + 1) / 2);
}

// P(|T| ≥ |t|) by composite Simpson integration of the density over
// [0, |t|], after mapping x = tan(θ) to keep the integrand smooth.
inline double t_two_sided_by_integration(double t, double df, int panels = 200000) {
  const double upper = std::atan(std::abs(t));
  const double h = upper / panels;
  auto f = [&](double theta) {
    const double c = std::cos(theta);
    return t_pdf(std::tan(theta), df) / (c * c);
  };
  double acc = f(0.0) + f(upper);
  for (int i = 1; i < panels; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
  const double central = acc * h / 3.0;
  return 1.0 - 2.0 * central;
}

// --- generators ---------------------------------------------------------

inline Matrix random_matrix(llm3dti::RandomStream& s, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = scale * s.gaussian();
  return m;
}

inline Matrix random_symmetric(llm3dti::RandomStream& s, std::size_t n) {
  Matrix m = random_matrix(s, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) m(i, j) = m(j, i);
  return m;
}

// Erdős–Rényi style symmetric 0/1 adjacency, no self-loops.
inline Matrix random_graph(llm3dti::RandomStream& s, std::size_t n, double p) {
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (s.uniform() < p) a(i, j) = a(j, i) = 1.0;
  return a;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace oracle
