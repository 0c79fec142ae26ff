#pragma once

// Minimum-error-entropy losses over a mini-batch of residuals.
//
// Both estimators start from the Gaussian window G(s) = exp(-s / (2 sigma^2))
// applied to squared pairwise distances between residual vectors:
//
//   kernel_mee  - Parzen information-potential form
//                   L = -log( (1/N^2) sum_ij G(||e_i - e_j||^2) )
//   matrix_mee  - matrix-based Renyi form on the normalized Gram matrix
//                 A = K / N with K_ij = G_{2 sigma}(||e_i - e_j||^2):
//                   L = -1/2 log2( sum_k lambda_k(A)^2 )
//                 Since sum_k lambda_k^2 = ||A||_F^2 = sum_ij A_ij^2 for a
//                 symmetric matrix, the training path never eigendecomposes;
//                 spectral_mee() keeps the explicit eigenvalue route as a
//                 slow cross-checking oracle.
//
// Gradients are exact analytic derivatives with sigma treated as a constant
// (the bandwidth is re-estimated between optimizer steps, not through them).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "mee/error.hpp"
#include "mee/matrix.hpp"

namespace mee {

// Kernel bandwidth, floored so that degenerate batches (all residuals equal)
// cannot produce a zero-width window.
class Bandwidth {
 public:
  static constexpr double kSigmaMin = 1e-6;

  explicit Bandwidth(double sigma) : sigma_(std::max(sigma, kSigmaMin)) {
    if (!std::isfinite(sigma)) throw NumericError("bandwidth: non-finite sigma");
  }

  double sigma() const { return sigma_; }

 private:
  double sigma_;
};

// A batch of residual vectors (N x d), validated finite on construction.
class ErrorBatch {
 public:
  explicit ErrorBatch(Matrix residuals) : residuals_(std::move(residuals)) {
    if (residuals_.rows() == 0 || residuals_.cols() == 0)
      throw ShapeError("error batch: empty residual matrix");
    if (!all_finite(residuals_)) throw NumericError("error batch: non-finite residual");
  }

  std::size_t count() const { return residuals_.rows(); }
  std::size_t dim() const { return residuals_.cols(); }
  const double* sample(std::size_t i) const { return residuals_.row(i); }
  const Matrix& residuals() const { return residuals_; }

 private:
  Matrix residuals_;
};

struct LossResult {
  double value = 0.0;
  Matrix grad;  // dL/de, same shape as the residual batch
};

inline double gaussian_window(double sq_dist, Bandwidth sigma) {
  const double s = sigma.sigma();
  return std::exp(-sq_dist / (2.0 * s * s));
}

namespace detail {

inline double row_sq_dist(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline void require_pairs(const ErrorBatch& errors, const char* op) {
  if (errors.count() < 2)
    throw ConfigError(std::string(op) + ": needs at least 2 samples, got " +
                      std::to_string(errors.count()));
}

}  // namespace detail

// All N^2 squared pairwise distances between residual vectors.
inline Matrix pairwise_sq_dists(const ErrorBatch& errors) {
  const std::size_t n = errors.count(), d = errors.dim();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double s = detail::row_sq_dist(errors.sample(i), errors.sample(j), d);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

// Median-of-squared-distances bandwidth heuristic. The median is taken over
// all N^2 pairwise entries, diagonal included; for an even count the two
// central order statistics are averaged.
inline Bandwidth median_bandwidth(const ErrorBatch& errors) {
  detail::require_pairs(errors, "median_bandwidth");
  Matrix dists = pairwise_sq_dists(errors);
  std::vector<double>& v = dists.data();
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double median = v[mid];
  if (n % 2 == 0) {
    const double lower = *std::max_element(v.begin(), v.begin() + mid);
    median = 0.5 * (lower + median);
  }
  return Bandwidth(median);
}

// Gram matrix of the Gaussian window at twice the squared bandwidth in the
// exponent denominator, i.e. K_ij = exp(-||e_i - e_j||^2 / (2 sigma^2)).
struct GramMatrix {
  std::size_t order = 0;
  std::vector<double> entries;  // row-major order x order

  double at(std::size_t i, std::size_t j) const { return entries[i * order + j]; }
};

inline GramMatrix gram_matrix(const ErrorBatch& errors, Bandwidth sigma) {
  detail::require_pairs(errors, "gram_matrix");
  const std::size_t n = errors.count(), d = errors.dim();
  GramMatrix k{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i) {
    k.entries[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = detail::row_sq_dist(errors.sample(i), errors.sample(j), d);
      const double val = gaussian_window(s, sigma);
      k.entries[i * n + j] = val;
      k.entries[j * n + i] = val;
    }
  }
  return k;
}

// Trace-normalized Gram matrix A = K / N (the Gaussian window has unit
// diagonal, so dividing by N alone lands trace(A) = 1).
struct NormalizedGram {
  std::size_t order = 0;
  std::vector<double> entries;

  double at(std::size_t i, std::size_t j) const { return entries[i * order + j]; }
};

inline NormalizedGram normalize_gram(const GramMatrix& k) {
  NormalizedGram a{k.order, k.entries};
  const double dn = static_cast<double>(k.order);
  for (double& v : a.entries) v /= dn;
  return a;
}

// Parzen / information-potential estimator, evaluated by the literal double
// loop. Value pass and gradient pass each walk all N^2 pairs; this is the
// O(N^2)-with-two-kernel-passes baseline the matrix form is benchmarked
// against.
//
//   L       = -log( S / N^2 ),  S = sum_ij G(||e_i - e_j||^2)
//   dL/de_m = (2 / (sigma^2 S)) sum_j G_mj (e_m - e_j)
inline LossResult kernel_mee(const ErrorBatch& errors, Bandwidth sigma) {
  detail::require_pairs(errors, "kernel_mee");
  const std::size_t n = errors.count(), d = errors.dim();
  const double dn = static_cast<double>(n);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      total += gaussian_window(detail::row_sq_dist(errors.sample(i), errors.sample(j), d), sigma);

  // The information potential is mathematically <= 1; clip rounding overshoot
  // on constant batches so the loss stays in [0, log N^2].
  const double ip = std::min(total / (dn * dn), 1.0);
  LossResult result;
  result.value = -std::log(ip);

  result.grad = Matrix(n, d);
  const double s2 = sigma.sigma() * sigma.sigma();
  const double coef = 2.0 / (s2 * total);
  std::vector<double> acc(d);
  for (std::size_t m = 0; m < n; ++m) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* em = errors.sample(m);
    for (std::size_t j = 0; j < n; ++j) {
      const double* ej = errors.sample(j);
      const double kmj = gaussian_window(detail::row_sq_dist(em, ej, d), sigma);
      for (std::size_t k = 0; k < d; ++k) acc[k] += kmj * (em[k] - ej[k]);
    }
    for (std::size_t k = 0; k < d; ++k) result.grad(m, k) = coef * acc[k];
  }
  return result;
}

namespace detail {

// Shared arithmetic of the matrix-based estimator so that the cached and the
// naive evaluation paths round identically, expression by expression.
inline double matrix_mee_value(double frobenius_sq, double sign) {
  return sign * 0.5 * std::log2(std::min(frobenius_sq, 1.0));
}

inline double matrix_mee_grad_coef(double frobenius_sq, double sign, double sigma) {
  return -sign * 2.0 / (std::numbers::ln2 * sigma * sigma * frobenius_sq);
}

}  // namespace detail

// Matrix-based Renyi entropy of order 2 on A = K/N, computed through the
// Frobenius identity sum_k lambda_k^2 = sum_ij A_ij^2 (valid for symmetric A),
// so one pass over the cached Gram entries yields both value and gradient:
//
//   L       = -1/2 log2( F ),  F = sum_ij A_ij^2
//   dL/de_m = (2 / (ln 2 sigma^2 F)) sum_j A_mj^2 (e_m - e_j)
//
// `paper_literal_sign` flips the sign of both value and gradient, matching
// texts that print the entropy with a leading +1/2 log2; the default
// (descent-friendly) orientation makes Adam minimize entropy.
inline LossResult matrix_mee(const ErrorBatch& errors, Bandwidth sigma,
                             bool paper_literal_sign = false) {
  detail::require_pairs(errors, "matrix_mee");
  const std::size_t n = errors.count(), d = errors.dim();
  const double dn = static_cast<double>(n);

  std::vector<double> a(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      const double s = detail::row_sq_dist(errors.sample(i), errors.sample(j), d);
      const double aij = gaussian_window(s, sigma) / dn;
      a[i * n + j] = aij;
      a[j * n + i] = aij;
    }

  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double aij = a[i * n + j];
      f += aij * aij;
    }

  const double sign = paper_literal_sign ? 1.0 : -1.0;
  LossResult result;
  result.value = detail::matrix_mee_value(f, sign);

  result.grad = Matrix(n, d);
  const double coef = detail::matrix_mee_grad_coef(f, sign, sigma.sigma());
  std::vector<double> acc(d);
  for (std::size_t m = 0; m < n; ++m) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* em = errors.sample(m);
    for (std::size_t j = 0; j < n; ++j) {
      const double* ej = errors.sample(j);
      const double amj = a[m * n + j];
      const double a2 = amj * amj;
      for (std::size_t k = 0; k < d; ++k) acc[k] += a2 * (em[k] - ej[k]);
    }
    for (std::size_t k = 0; k < d; ++k) result.grad(m, k) = coef * acc[k];
  }
  return result;
}

// Same estimator as matrix_mee but evaluated the naive way: nothing cached,
// every pairwise window recomputed in both the value and the gradient pass.
// Kept as a benchmark baseline and as an agreement oracle; the arithmetic
// mirrors matrix_mee operation for operation, so the two paths track each
// other bit for bit over a whole training run.
inline LossResult matrix_mee_reference(const ErrorBatch& errors, Bandwidth sigma,
                                       bool paper_literal_sign = false) {
  detail::require_pairs(errors, "matrix_mee_reference");
  const std::size_t n = errors.count(), d = errors.dim();
  const double dn = static_cast<double>(n);

  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double s = detail::row_sq_dist(errors.sample(i), errors.sample(j), d);
      const double aij = gaussian_window(s, sigma) / dn;
      f += aij * aij;
    }

  const double sign = paper_literal_sign ? 1.0 : -1.0;
  LossResult result;
  result.value = detail::matrix_mee_value(f, sign);

  result.grad = Matrix(n, d);
  const double coef = detail::matrix_mee_grad_coef(f, sign, sigma.sigma());
  std::vector<double> acc(d);
  for (std::size_t m = 0; m < n; ++m) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const double* em = errors.sample(m);
    for (std::size_t j = 0; j < n; ++j) {
      const double* ej = errors.sample(j);
      const double s = detail::row_sq_dist(em, ej, d);
      const double amj = gaussian_window(s, sigma) / dn;
      const double a2 = amj * amj;
      for (std::size_t k = 0; k < d; ++k) acc[k] += a2 * (em[k] - ej[k]);
    }
    for (std::size_t k = 0; k < d; ++k) result.grad(m, k) = coef * acc[k];
  }
  return result;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations. Slow and
// sturdy; only used by the spectral oracle, capped at small orders.
inline std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n) {
  constexpr int kMaxSweeps = 64;
  auto off_norm = [&]() {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
    return std::sqrt(2.0 * s);
  };
  double frob = 0.0;
  for (double v : a) frob += v * v;
  const double tol = 1e-14 * std::max(std::sqrt(frob), 1e-30);

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_norm() <= tol) {
      std::vector<double> eig(n);
      for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
      std::sort(eig.begin(), eig.end(), std::greater<>());
      return eig;
    }
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (std::abs(apq) <= tol / static_cast<double>(n)) continue;
        const double tau = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (tau >= 0.0) ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                                      : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        a[p * n + p] -= t * apq;
        a[q * n + q] += t * apq;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          if (r == p || r == q) continue;
          const double arp = a[r * n + p];
          const double arq = a[r * n + q];
          a[r * n + p] = c * arp - s * arq;
          a[p * n + r] = a[r * n + p];
          a[r * n + q] = s * arp + c * arq;
          a[q * n + r] = a[r * n + q];
        }
      }
  }
  throw NumericError("symmetric_eigenvalues: Jacobi sweep limit exceeded");
}

inline std::vector<double> gram_spectrum(const NormalizedGram& a) {
  return symmetric_eigenvalues(a.entries, a.order);
}

// Value of the matrix estimator via an explicit eigendecomposition of A.
// Cross-checking oracle for matrix_mee; never on the training path.
inline double spectral_mee(const ErrorBatch& errors, Bandwidth sigma,
                           bool paper_literal_sign = false) {
  constexpr std::size_t kSpectralCap = 128;
  detail::require_pairs(errors, "spectral_mee");
  if (errors.count() > kSpectralCap)
    throw ConfigError("spectral_mee: oracle capped at N <= " + std::to_string(kSpectralCap));
  const NormalizedGram a = normalize_gram(gram_matrix(errors, sigma));
  double f = 0.0;
  for (double lambda : gram_spectrum(a)) f += lambda * lambda;
  const double sign = paper_literal_sign ? 1.0 : -1.0;
  return sign * 0.5 * std::log2(f);
}

// Mean squared error over all residual components: L = (1/(N d)) sum e^2.
inline LossResult mse_loss(const ErrorBatch& errors) {
  const std::size_t n = errors.count(), d = errors.dim();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
  LossResult result;
  result.grad = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double e = errors.residuals()(i, k);
      result.value += e * e * scale;
      result.grad(i, k) = 2.0 * e * scale;
    }
  return result;
}

// Mean absolute error; subgradient 0 at exactly zero residual.
inline LossResult mae_loss(const ErrorBatch& errors) {
  const std::size_t n = errors.count(), d = errors.dim();
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(d));
  LossResult result;
  result.grad = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k) {
      const double e = errors.residuals()(i, k);
      result.value += std::abs(e) * scale;
      result.grad(i, k) = (e > 0.0) ? scale : (e < 0.0 ? -scale : 0.0);
    }
  return result;
}

}  // namespace mee
