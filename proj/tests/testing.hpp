#ifndef AFE_TESTS_TESTING_HPP
#define AFE_TESTS_TESTING_HPP

// Shared fixtures and independent reference computations for the tests.
// Nothing here calls into the library's numerical code; each oracle is a
// straight transcription of its defining formula.

#include "afe/core.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

namespace afe::testing {

inline double rel_err(double got, double want) {
  const double scale = std::max({std::abs(got), std::abs(want), 1e-300});
  return std::abs(got - want) / scale;
}

/// Relative error against the larger magnitude, with an absolute floor so
/// that values that should be zero do not blow up the ratio.
inline double close_err(double got, double want, double floor = 1e-12) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), floor});
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("afe-test-" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

struct Blobs {
  Matrix x;
  Labels y;
};

/// Three Gaussian clusters at well separated centres, `per_class` rows each,
/// interleaved Bad, Neutral, Good.
inline Blobs blobs(int per_class, int dims, double spread, std::uint64_t seed, double separation = 1.0) {
  Rng rng(seed);
  Blobs b;
  b.x.resize(3 * per_class, dims);
  for (int i = 0; i < per_class; ++i)
    for (int c = 0; c < 3; ++c) {
      const int r = 3 * i + c;
      for (int d = 0; d < dims; ++d) {
        const double centre = (d % 3 == c) ? separation : 0.0;
        b.x(r, d) = centre + spread * rng.normal();
      }
      b.y.push_back(emotion_from_code(c));
    }
  return b;
}

/// Nearest-centroid classifier fitted and applied to the same rows.
inline double nearest_centroid_accuracy(const Matrix& x, const Labels& y) {
  std::vector<std::vector<double>> centre(3, std::vector<double>(static_cast<std::size_t>(x.cols()), 0.0));
  std::vector<int> count(3, 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int c = code(y[static_cast<std::size_t>(i)]);
    ++count[c];
    for (Eigen::Index d = 0; d < x.cols(); ++d) centre[c][static_cast<std::size_t>(d)] += x(i, d);
  }
  for (int c = 0; c < 3; ++c)
    for (auto& v : centre[c]) v /= std::max(count[c], 1);
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = INFINITY;
    for (int c = 0; c < 3; ++c) {
      if (count[c] == 0) continue;
      double d2 = 0;
      for (Eigen::Index d = 0; d < x.cols(); ++d) {
        const double diff = x(i, d) - centre[c][static_cast<std::size_t>(d)];
        d2 += diff * diff;
      }
      if (d2 < best_d) {
        best_d = d2;
        best = c;
      }
    }
    correct += best == code(y[static_cast<std::size_t>(i)]);
  }
  return static_cast<double>(correct) / static_cast<double>(x.rows());
}

// DSP oracles -----------------------------------------------------------------

/// sum_l w(k, l) |S(t, l)|^2 by explicit loops.
inline Matrix naive_mel(const Matrix& mags, const Matrix& weights) {
  Matrix out = Matrix::Zero(mags.rows(), weights.rows());
  for (Eigen::Index t = 0; t < mags.rows(); ++t)
    for (Eigen::Index k = 0; k < weights.rows(); ++k) {
      double s = 0.0;
      for (Eigen::Index l = 0; l < mags.cols(); ++l) s += weights(k, l) * mags(t, l) * mags(t, l);
      out(t, k) = s;
    }
  return out;
}

/// C_n = sum_{k=1..K} v_k cos(n (k - 1/2) pi / K).
inline std::vector<double> naive_dct(const std::vector<double>& v, int n_coeffs) {
  const auto kk = static_cast<int>(v.size());
  std::vector<double> out(static_cast<std::size_t>(n_coeffs), 0.0);
  for (int n = 0; n < n_coeffs; ++n)
    for (int k = 1; k <= kk; ++k)
      out[static_cast<std::size_t>(n)] += v[static_cast<std::size_t>(k - 1)] * std::cos(n * (k - 0.5) * std::numbers::pi / kk);
  return out;
}

inline double naive_zcr(const std::vector<double>& x) {
  int changes = 0;
  for (std::size_t i = 1; i < x.size(); ++i) changes += (x[i] >= 0) != (x[i - 1] >= 0);
  // each change contributes |(+1) - (-1)| = 2
  return 2.0 * changes / (2.0 * static_cast<double>(x.size() - 1));
}

inline double naive_centroid(const std::vector<double>& m, const std::vector<double>& f) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    num += f[i] * m[i];
    den += m[i];
  }
  return den > 0 ? num / den : 0.0;
}

inline double naive_rolloff(const std::vector<double>& m, const std::vector<double>& f, double fraction) {
  double total = 0.0;
  for (double v : m) total += v * v;
  if (total <= 0) return 0.0;
  // smallest r among the bin frequencies with sum_{f_i <= r} M^2 >= fraction * total
  double best = INFINITY;
  for (double r : f) {
    double below = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (f[i] <= r) below += m[i] * m[i];
    if (below >= fraction * total) best = std::min(best, r);
  }
  return best;
}

/// Pitch class from the equal-tempered note name of f, A4 = 440 Hz.
inline int naive_pitch_class(double f) {
  const double semis = 12.0 * std::log2(f / 440.0);
  const long n = static_cast<long>(std::floor(semis + 0.5));
  long c = n % 12;
  if (c < 0) c += 12;
  return static_cast<int>(c);
}

inline std::vector<double> naive_chroma(const std::vector<double>& m, const std::vector<double>& f) {
  std::vector<double> out(12, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (f[i] > 0) out[static_cast<std::size_t>(naive_pitch_class(f[i]))] += m[i] * m[i];
  return out;
}

// Statistics oracles ------------------------------------------------------------

inline double naive_population_variance(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size());
}

/// Chi-square of a non-negative feature: observed per-class sums against
/// class-share times total.
inline double naive_chi2(const std::vector<double>& v, const Labels& y) {
  double total = 0;
  double obs[3] = {0, 0, 0};
  int cnt[3] = {0, 0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    total += v[i];
    obs[code(y[i])] += v[i];
    ++cnt[code(y[i])];
  }
  double chi = 0;
  for (int c = 0; c < 3; ++c) {
    if (cnt[c] == 0) continue;
    const double e = total * cnt[c] / static_cast<double>(v.size());
    if (e > 0) chi += (obs[c] - e) * (obs[c] - e) / e;
  }
  return chi;
}

/// Average ranks by counting: rank = (#less) + (#equal + 1) / 2.
inline std::vector<double> naive_ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      less += w < v[i];
      equal += w == v[i];
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

/// Pearson correlation of the average ranks; 0 when either side is constant.
inline double naive_spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = naive_ranks(a), rb = naive_ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0 || sbb == 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline std::vector<double> column(const Matrix& x, Eigen::Index j) {
  std::vector<double> v(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) v[static_cast<std::size_t>(i)] = x(i, j);
  return v;
}

inline std::vector<double> label_codes(const Labels& y) {
  std::vector<double> v;
  for (auto e : y) v.push_back(code(e));
  return v;
}

// SVM dual oracle -----------------------------------------------------------------

struct QpOptimum {
  Vector alpha;
  double objective = -INFINITY;
};

/// Maximises sum(a) - 1/2 a' Q a subject to 0 <= a <= C and y'a = 0 by
/// enumerating every assignment of each variable to {0, C, free}. On each
/// face the free block solves the equality-constrained stationarity system
///   [Q_FF  y_F] [a_F]   [1 - Q_FB a_B]
///   [y_F'  0  ] [nu ] = [  - y_B'a_B ]
/// and the candidate is kept when it lies inside the box. The objective is
/// concave, so the best feasible candidate is the global optimum.
inline QpOptimum exhaustive_dual_qp(const Matrix& k, const Vector& y, double c) {
  const int n = static_cast<int>(y.size());
  Matrix q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) q(i, j) = y(i) * y(j) * k(i, j);
  auto objective = [&](const Vector& a) { return a.sum() - 0.5 * a.dot(q * a); };

  QpOptimum best;
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  std::vector<int> state(static_cast<std::size_t>(n));
  for (int code_ = 0; code_ < total; ++code_) {
    int rest = code_;
    std::vector<int> free_idx;
    Vector a = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[static_cast<std::size_t>(i)] = rest % 3;
      rest /= 3;
      if (state[static_cast<std::size_t>(i)] == 1) a(i) = c;
      if (state[static_cast<std::size_t>(i)] == 2) free_idx.push_back(i);
    }
    const int f = static_cast<int>(free_idx.size());
    if (f > 0) {
      Matrix m = Matrix::Zero(f + 1, f + 1);
      Vector rhs(f + 1);
      double ya_bound = 0;
      for (int i = 0; i < n; ++i) ya_bound += y(i) * a(i);
      for (int r = 0; r < f; ++r) {
        const int i = free_idx[static_cast<std::size_t>(r)];
        double qa = 0;
        for (int j = 0; j < n; ++j) qa += q(i, j) * a(j);
        rhs(r) = 1.0 - qa;
        for (int s = 0; s < f; ++s) m(r, s) = q(i, free_idx[static_cast<std::size_t>(s)]);
        m(r, f) = y(i);
        m(f, r) = y(i);
      }
      rhs(f) = -ya_bound;
      const Vector sol = m.fullPivLu().solve(rhs);
      if (!((m * sol - rhs).norm() < 1e-9 * (1.0 + rhs.norm()))) continue;
      bool inside = true;
      for (int r = 0; r < f; ++r) {
        const double v = sol(r);
        if (!(v > -1e-12 && v < c + 1e-12)) inside = false;
        a(free_idx[static_cast<std::size_t>(r)]) = std::clamp(v, 0.0, c);
      }
      if (!inside) continue;
    }
    double eq = 0;
    for (int i = 0; i < n; ++i) eq += y(i) * a(i);
    if (std::abs(eq) > 1e-9) continue;
    const double obj = objective(a);
    if (obj > best.objective) {
      best.objective = obj;
      best.alpha = a;
    }
  }
  return best;
}

}  // namespace afe::testing

#endif  // AFE_TESTS_TESTING_HPP
