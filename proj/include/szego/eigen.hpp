#pragma once

// Real-symmetric eigensolvers: implicit-shift QL for tridiagonal matrices,
// Householder reduction for dense ones, and the spectral-theorem functional
// calculus f(A) = Q f(Lambda) Q^T built on top of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "szego/core.hpp"
#include "szego/model.hpp"

namespace szego {

// Dense symmetric matrix, row-major, both triangles stored and kept equal.
class SymmetricMatrix {
 public:
  SymmetricMatrix() = default;
  explicit SymmetricMatrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  static SymmetricMatrix identity(std::size_t n) {
    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
    return m;
  }

  static SymmetricMatrix diagonal(std::span<const double> d) {
    SymmetricMatrix m(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m.a_[i * d.size() + i] = d[i];
    return m;
  }

  static SymmetricMatrix from_tridiagonal(const TridiagonalOperator& t) {
    const std::size_t n = t.order();
    SymmetricMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m.a_[i * n + i] = t.diagonal[i];
    for (std::size_t i = 0; i + 1 < n; ++i) m.set(i, i + 1, t.off_diagonal[i]);
    return m;
  }

  std::size_t order() const noexcept { return n_; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) noexcept {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = v;
  }

  std::span<const double> row(std::size_t i) const noexcept { return {a_.data() + i * n_, n_}; }
  std::span<const double> data() const noexcept { return a_; }

  double trace() const noexcept {
    CompensatedSum s;
    for (std::size_t i = 0; i < n_; ++i) s += a_[i * n_ + i];
    return s.value();
  }

  double frobenius_norm() const noexcept {
    double s = 0.0;
    for (double x : a_) s += x * x;
    return std::sqrt(s);
  }

  // Principal submatrix on indices [begin, begin + count).
  SymmetricMatrix principal_block(std::size_t begin, std::size_t count) const {
    SymmetricMatrix b(count);
    for (std::size_t i = 0; i < count; ++i)
      std::copy_n(a_.data() + (begin + i) * n_ + begin, count, b.a_.data() + i * count);
    return b;
  }

  bool is_symmetric() const noexcept {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if (a_[i * n_ + j] != a_[j * n_ + i]) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

// Half-open range of eigenvector components (matrix rows) to keep.
struct ComponentRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const noexcept { return end - begin; }
};

// Ascending eigenvalues and, optionally, a contiguous block of components of
// every eigenvector. Eigenvectors are stored eigenvector-major:
// vectors[k * component_count + r] is component (component_offset + r) of v_k.
struct EigenDecomposition {
  std::vector<double> values;
  std::size_t component_offset = 0;
  std::size_t component_count = 0;
  std::vector<double> vectors;

  std::size_t order() const noexcept { return values.size(); }
  bool has_vectors() const noexcept { return component_count > 0; }
  bool is_complete() const noexcept { return component_offset == 0 && component_count == values.size(); }

  std::span<const double> vector(std::size_t k) const noexcept {
    return {vectors.data() + k * component_count, component_count};
  }
  double component(std::size_t i, std::size_t k) const noexcept {
    return vectors[k * component_count + (i - component_offset)];
  }
};

inline constexpr int kMaxQlSweeps = 50;

namespace detail {

inline constexpr std::size_t kLanes = 8;

// Dot product with kLanes independent partial sums so the loop vectorizes
// without reassociation; the summation order is fixed, hence reproducible.
inline double dot(const double* __restrict x, const double* __restrict y, std::size_t n) noexcept {
  double acc[kLanes] = {};
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes)
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += x[k + l] * y[k + l];
  double tail = 0.0;
  for (; k < n; ++k) tail += x[k] * y[k];
  double s = 0.0;
  for (std::size_t l = 0; l < kLanes; ++l) s += acc[l];
  return s + tail;
}

// Applies the rotation sequence of one QL sweep (rotation i acts on rows i and
// i+1, applied for i = hi-1 down to lo) to z, one column block at a time.
inline void apply_rotations(double* z, std::size_t width, std::size_t lo, std::size_t hi,
                            const double* cs, const double* sn) noexcept {
  constexpr std::size_t block = 128;
  for (std::size_t k0 = 0; k0 < width; k0 += block) {
    const std::size_t k1 = std::min(width, k0 + block);
    for (std::size_t i = hi; i-- > lo;) {
      const double c = cs[i];
      const double s = sn[i];
      double* __restrict zi = z + i * width;
      double* __restrict zj = z + (i + 1) * width;
      for (std::size_t k = k0; k < k1; ++k) {
        const double t = zj[k];
        zj[k] = s * zi[k] + c * t;
        zi[k] = c * zi[k] - s * t;
      }
    }
  }
}

// Implicit-shift QL on (d, e) with e[i] coupling d[i], d[i+1]. Rotations are
// accumulated into the rows of z (n rows of `width` doubles); width may be 0.
// On return d is ascending and z rows are permuted to match.
inline void tridiagonal_ql(std::vector<double>& d, std::vector<double> e, double* z, std::size_t width) {
  const std::size_t n = d.size();
  if (n == 0) return;
  e.resize(n, 0.0);
  e[n - 1] = 0.0;
  std::vector<double> cs(width > 0 ? n : 0), sn(width > 0 ? n : 0);

  constexpr double eps = std::numeric_limits<double>::epsilon();
  double shift_total = 0.0;
  double tst1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d[l]) + std::abs(e[l]));
    std::size_t m = l;
    while (m < n - 1 && std::abs(e[m]) > eps * tst1) ++m;

    if (m > l) {
      int sweeps = 0;
      do {
        if (++sweeps > kMaxQlSweeps) throw ConvergenceError(n, l);

        double g = d[l];
        double p = (d[l + 1] - g) / (2.0 * e[l]);
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d[l] = e[l] / (p + r);
        d[l + 1] = e[l] * (p + r);
        const double dl1 = d[l + 1];
        double h = g - d[l];
        for (std::size_t i = l + 2; i < n; ++i) d[i] -= h;
        shift_total += h;

        p = d[m];
        double c = 1.0, c2 = 1.0, c3 = 1.0;
        const double el1 = e[l + 1];
        double s = 0.0, s2 = 0.0;
        for (std::size_t i = m; i-- > l;) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e[i];
          h = c * p;
          r = std::hypot(p, e[i]);
          e[i + 1] = s * r;
          s = e[i] / r;
          c = p / r;
          p = c * d[i] - s * g;
          d[i + 1] = h + s * (c * g + s * d[i]);
          if (width > 0) {
            cs[i] = c;
            sn[i] = s;
          }
        }
        if (width > 0) apply_rotations(z, width, l, m, cs.data(), sn.data());
        p = -s * s2 * c3 * el1 * e[l] / dl1;
        e[l] = s * p;
        d[l] = c * p;
      } while (std::abs(e[l]) > eps * tst1);
    }
    d[l] += shift_total;
    e[l] = 0.0;
  }

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  bool sorted = true;
  for (std::size_t i = 0; i < n; ++i) sorted = sorted && perm[i] == i;
  if (sorted) return;

  std::vector<double> ds(n);
  for (std::size_t i = 0; i < n; ++i) ds[i] = d[perm[i]];
  d.swap(ds);
  if (width > 0) {
    std::vector<double> zs(n * width);
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(z + perm[i] * width, width, zs.data() + i * width);
    std::copy(zs.begin(), zs.end(), z);
  }
}

// Householder reduction A = Q T Q^T. Overwrites `a` (row-major n x n, both
// triangles). Returns (diag, off); when `reflectors` is non-null it receives
// the Householder vectors needed to rebuild Q.
struct Reflector {
  std::size_t start = 0;  // v is supported on [start, n)
  double tau = 0.0;
  std::vector<double> v;
};

inline void householder_tridiagonalize(std::vector<double>& a, std::size_t n, std::vector<double>& diag,
                                       std::vector<double>& off, std::vector<Reflector>* reflectors) {
  diag.assign(n, 0.0);
  off.assign(n > 0 ? n - 1 : 0, 0.0);
  std::vector<double> v(n), p(n);

  for (std::size_t k = 0; k + 2 < n; ++k) {
    const std::size_t s = k + 1;  // trailing block [s, n)
    const std::size_t m = n - s;
    const double* rowk = a.data() + k * n;
    diag[k] = rowk[k];

    double tail = 0.0;
    for (std::size_t j = s + 1; j < n; ++j) tail += rowk[j] * rowk[j];
    const double x0 = rowk[s];
    if (tail == 0.0) {
      off[k] = x0;
      continue;
    }
    const double xnorm = std::sqrt(x0 * x0 + tail);
    const double alpha = x0 >= 0.0 ? -xnorm : xnorm;
    v[0] = x0 - alpha;
    for (std::size_t j = 1; j < m; ++j) v[j] = rowk[s + j];
    const double vtv = v[0] * v[0] + tail;
    const double tau = 2.0 / vtv;
    off[k] = alpha;

    // p = tau * A22 v
    double ptv = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      p[i] = tau * dot(a.data() + (s + i) * n + s, v.data(), m);
      ptv += p[i] * v[i];
    }
    // w = p - (tau/2)(p^T v) v, A22 -= v w^T + w v^T
    const double kk = 0.5 * tau * ptv;
    for (std::size_t i = 0; i < m; ++i) p[i] -= kk * v[i];
    for (std::size_t i = 0; i < m; ++i) {
      double* __restrict ri = a.data() + (s + i) * n + s;
      const double vi = v[i];
      const double wi = p[i];
      for (std::size_t j = 0; j < m; ++j) ri[j] -= vi * p[j] + wi * v[j];
    }

    if (reflectors) reflectors->push_back({s, tau, std::vector<double>(v.begin(), v.begin() + m)});
  }
  if (n >= 2) {
    diag[n - 2] = a[(n - 2) * n + (n - 2)];
    off[n - 2] = a[(n - 1) * n + (n - 2)];
  }
  if (n >= 1) diag[n - 1] = a[(n - 1) * n + (n - 1)];
}

}  // namespace detail

// Eigen-decomposition of a symmetric tridiagonal matrix given by its diagonal
// and off-diagonal, keeping components [rows.begin, rows.end) of each vector.
inline EigenDecomposition eig_tridiagonal(std::span<const double> diag, std::span<const double> off,
                                          ComponentRange rows) {
  const std::size_t n = diag.size();
  if (n == 0) throw ValidationError("order", "eigensolver needs order >= 1");
  if (off.size() + 1 != n) throw ValidationError("off_diagonal", "length must be order - 1");
  if (rows.end > n || rows.begin > rows.end) throw ValidationError("rows", "component range out of bounds");

  EigenDecomposition out;
  out.values.assign(diag.begin(), diag.end());
  out.component_offset = rows.begin;
  out.component_count = rows.size();
  out.vectors.assign(n * rows.size(), 0.0);
  for (std::size_t k = rows.begin; k < rows.end; ++k) out.vectors[k * rows.size() + (k - rows.begin)] = 1.0;
  std::vector<double> e(off.begin(), off.end());
  detail::tridiagonal_ql(out.values, std::move(e), out.vectors.data(), rows.size());
  return out;
}

inline EigenDecomposition eig_tridiagonal(const TridiagonalOperator& t) {
  return eig_tridiagonal(t.diagonal, t.off_diagonal, {0, t.order()});
}

inline std::vector<double> eigenvalues_tridiagonal(std::span<const double> diag, std::span<const double> off) {
  if (diag.empty()) throw ValidationError("order", "eigensolver needs order >= 1");
  if (off.size() + 1 != diag.size()) throw ValidationError("off_diagonal", "length must be order - 1");
  std::vector<double> d(diag.begin(), diag.end());
  detail::tridiagonal_ql(d, std::vector<double>(off.begin(), off.end()), nullptr, 0);
  return d;
}

inline std::vector<double> eigenvalues_tridiagonal(const TridiagonalOperator& t) {
  return eigenvalues_tridiagonal(t.diagonal, t.off_diagonal);
}

// Dense symmetric eigensolver: Householder reduction followed by QL.
inline EigenDecomposition eig_dense(const SymmetricMatrix& a) {
  const std::size_t n = a.order();
  if (n == 0) throw ValidationError("order", "eigensolver needs order >= 1");
  std::vector<double> work(a.data().begin(), a.data().end());
  std::vector<double> diag, off;
  std::vector<detail::Reflector> refl;
  detail::householder_tridiagonalize(work, n, diag, off, &refl);

  // Rows of z start as columns of Q = H_0 H_1 ... H_{n-3}.
  std::vector<double> q(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) q[i * n + i] = 1.0;
  for (auto it = refl.rbegin(); it != refl.rend(); ++it) {
    const std::size_t s = it->start;
    // Q <- H Q on rows [s, n): Q -= tau v (v^T Q)
    std::vector<double> vq(n, 0.0);
    for (std::size_t i = 0; i < it->v.size(); ++i) {
      const double vi = it->v[i];
      const double* row = q.data() + (s + i) * n;
      for (std::size_t j = 0; j < n; ++j) vq[j] += vi * row[j];
    }
    for (std::size_t i = 0; i < it->v.size(); ++i) {
      const double f = it->tau * it->v[i];
      double* row = q.data() + (s + i) * n;
      for (std::size_t j = 0; j < n; ++j) row[j] -= f * vq[j];
    }
  }
  EigenDecomposition out;
  out.values = std::move(diag);
  out.component_offset = 0;
  out.component_count = n;
  out.vectors.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.vectors[j * n + i] = q[i * n + j];
  detail::tridiagonal_ql(out.values, std::move(off), out.vectors.data(), n);
  return out;
}

inline std::vector<double> eigenvalues_dense(const SymmetricMatrix& a) {
  const std::size_t n = a.order();
  if (n == 0) throw ValidationError("order", "eigensolver needs order >= 1");
  std::vector<double> work(a.data().begin(), a.data().end());
  std::vector<double> diag, off;
  detail::householder_tridiagonalize(work, n, diag, off, nullptr);
  detail::tridiagonal_ql(diag, std::move(off), nullptr, 0);
  return diag;
}

namespace detail {

template <class F>
std::vector<double> apply_to_spectrum(std::span<const double> values, F&& f) {
  std::vector<double> fv(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    fv[k] = f(values[k]);
    if (!std::isfinite(fv[k]))
      throw DomainError("function is not finite at eigenvalue " + std::to_string(values[k]));
  }
  return fv;
}

}  // namespace detail

// Q f(Lambda) Q^T restricted to the stored component block: for a partial
// decomposition this is the corresponding principal block of f(A).
template <class F>
SymmetricMatrix matrix_function(const EigenDecomposition& e, F&& f) {
  if (!e.has_vectors()) throw ValidationError("vectors", "matrix_function needs eigenvectors");
  const std::size_t n = e.order();
  const std::size_t w = e.component_count;
  const std::vector<double> fv = detail::apply_to_spectrum(e.values, f);

  // Component-major copies: q[r][k] and fq[r][k] = f_k q[r][k].
  std::vector<double> q(w * n), fq(w * n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* vk = e.vectors.data() + k * w;
    for (std::size_t r = 0; r < w; ++r) {
      q[r * n + k] = vk[r];
      fq[r * n + k] = fv[k] * vk[r];
    }
  }

  SymmetricMatrix out(w);
  constexpr std::size_t tile = 4;
  for (std::size_t r0 = 0; r0 < w; r0 += tile) {
    const std::size_t r1 = std::min(r0 + tile, w);
    for (std::size_t s0 = r0; s0 < w; s0 += tile) {
      const std::size_t s1 = std::min(s0 + tile, w);
      if (r1 - r0 == tile && s1 - s0 == tile) {
        double acc[tile][tile][detail::kLanes] = {};
        const double* qr[tile];
        const double* fs[tile];
        for (std::size_t t = 0; t < tile; ++t) {
          qr[t] = q.data() + (r0 + t) * n;
          fs[t] = fq.data() + (s0 + t) * n;
        }
        std::size_t k = 0;
        for (; k + detail::kLanes <= n; k += detail::kLanes)
          for (std::size_t a = 0; a < tile; ++a)
            for (std::size_t b = 0; b < tile; ++b)
              for (std::size_t l = 0; l < detail::kLanes; ++l) acc[a][b][l] += qr[a][k + l] * fs[b][k + l];
        double sum[tile][tile] = {};
        for (std::size_t a = 0; a < tile; ++a)
          for (std::size_t b = 0; b < tile; ++b) {
            double t = 0.0;
            for (std::size_t kk = k; kk < n; ++kk) t += qr[a][kk] * fs[b][kk];
            double lanes = 0.0;
            for (std::size_t l = 0; l < detail::kLanes; ++l) lanes += acc[a][b][l];
            sum[a][b] = lanes + t;
          }
        for (std::size_t a = 0; a < tile; ++a)
          for (std::size_t b = 0; b < tile; ++b)
            if (s0 + b >= r0 + a) out.set(r0 + a, s0 + b, sum[a][b]);
      } else {
        for (std::size_t r = r0; r < r1; ++r)
          for (std::size_t s = std::max(s0, r); s < s1; ++s) {
            out.set(r, s, detail::dot(q.data() + r * n, fq.data() + s * n, n));
          }
      }
    }
  }
  return out;
}

// Diagonal entries of f(A) over the stored component block, without forming f(A).
template <class F>
std::vector<double> matrix_function_diagonal(const EigenDecomposition& e, F&& f) {
  if (!e.has_vectors()) throw ValidationError("vectors", "matrix_function needs eigenvectors");
  const std::size_t w = e.component_count;
  const std::vector<double> fv = detail::apply_to_spectrum(e.values, f);
  std::vector<CompensatedSum> acc(w);
  for (std::size_t k = 0; k < e.order(); ++k) {
    const double* vk = e.vectors.data() + k * w;
    for (std::size_t r = 0; r < w; ++r) acc[r] += fv[k] * vk[r] * vk[r];
  }
  std::vector<double> out(w);
  for (std::size_t r = 0; r < w; ++r) out[r] = acc[r].value();
  return out;
}

// sum_k f(lambda_k), compensated.
template <class F>
double trace_function(std::span<const double> values, F&& f) {
  const std::vector<double> fv = detail::apply_to_spectrum(values, f);
  return compensated_sum(fv);
}

template <class F>
double trace_function(const EigenDecomposition& e, F&& f) {
  return trace_function(std::span<const double>(e.values), std::forward<F>(f));
}

}  // namespace szego
