#include "isolab/oracles.hpp"

#include <algorithm>
#include <cmath>

namespace isolab::oracles {

namespace {

std::complex<double> horner(const std::vector<double>& c,
                            std::complex<double> z) {
  std::complex<double> p(1.0, 0.0);
  for (double ck : c) p = p * z + ck;
  return p;
}

double determinant_laplace(const DenseMatrix& m) {
  const Index n = m.rows();
  if (n == 1) return m(0, 0);
  if (n == 2) return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  double det = 0.0;
  double sign = 1.0;
  for (Index j = 0; j < n; ++j) {
    DenseMatrix minor(n - 1, n - 1);
    for (Index r = 1; r < n; ++r) {
      Index cc = 0;
      for (Index c = 0; c < n; ++c) {
        if (c == j) continue;
        minor(r - 1, cc++) = m(r, c);
      }
    }
    det += sign * m(0, j) * determinant_laplace(minor);
    sign = -sign;
  }
  return det;
}

}  // namespace

std::vector<std::complex<double>> poly_roots(
    const std::vector<double>& coeffs) {
  const std::size_t n = coeffs.size();
  if (n == 0) return {};
  // Distinct non-real starting points (powers of 0.4 + 0.9i) avoid the
  // symmetry traps of roots-of-unity initialization.
  std::vector<std::complex<double>> z(n);
  const std::complex<double> base(0.4, 0.9);
  std::complex<double> p(1.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    p *= base;
    z[k] = p;
  }
  double scale = 1.0;
  for (double c : coeffs) scale = std::max(scale, std::abs(c));
  for (int iter = 0; iter < 1000; ++iter) {
    double max_step = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      std::complex<double> denom(1.0, 0.0);
      for (std::size_t j = 0; j < n; ++j)
        if (j != k) denom *= z[k] - z[j];
      if (std::abs(denom) < 1e-300) {
        // Collided iterates: nudge and continue.
        z[k] += std::complex<double>(1e-8 * (double(k) + 1.0), 1e-8);
        max_step = 1.0;
        continue;
      }
      const std::complex<double> step = horner(coeffs, z[k]) / denom;
      z[k] -= step;
      max_step = std::max(max_step, std::abs(step));
    }
    if (max_step <= 1e-14 * (1.0 + scale)) return z;
  }
  throw ConvergenceError("poly_roots: Durand-Kerner did not converge", 0.0);
}

std::vector<double> char_poly(const DenseMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ShapeError("char_poly: square non-empty matrix required");
  if (m.rows() > 6)
    throw ValidationError("char_poly: oracle limited to n <= 6");
  const Index n = m.rows();
  // Faddeev-LeVerrier: M_1 = A, c_1 = -tr(M_1),
  // M_k = A (M_{k-1} + c_{k-1} I), c_k = -tr(M_k)/k.
  std::vector<double> c(static_cast<std::size_t>(n));
  DenseMatrix mk = m;
  c[0] = -mk.trace();
  for (Index k = 2; k <= n; ++k) {
    DenseMatrix shifted = mk;
    shifted.diagonal().array() += c[static_cast<std::size_t>(k - 2)];
    mk = m * shifted;
    c[static_cast<std::size_t>(k - 1)] = -mk.trace() / double(k);
  }
  return c;
}

double spectral_radius_ref(const DenseMatrix& m) {
  double radius = 0.0;
  for (const auto& z : poly_roots(char_poly(m)))
    radius = std::max(radius, std::abs(z));
  return radius;
}

double largest_singular_value_ref(const DenseMatrix& m) {
  const DenseMatrix gram = (m.rows() <= m.cols())
                               ? DenseMatrix(m * m.transpose())
                               : DenseMatrix(m.transpose() * m);
  // Gram roots are real and nonnegative up to round-off.
  double lambda_max = 0.0;
  for (const auto& z : poly_roots(char_poly(gram)))
    lambda_max = std::max(lambda_max, z.real());
  return std::sqrt(std::max(0.0, lambda_max));
}

DenseMatrix inverse_ref(const DenseMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ShapeError("inverse_ref: square non-empty matrix required");
  if (m.rows() > 4)
    throw ValidationError("inverse_ref: oracle limited to n <= 4");
  const Index n = m.rows();
  const double det = determinant_laplace(m);
  if (std::abs(det) < 1e-300)
    throw SingularityError("inverse_ref: matrix is singular");
  DenseMatrix inv(n, n);
  if (n == 1) {
    inv(0, 0) = 1.0 / det;
    return inv;
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      DenseMatrix minor(n - 1, n - 1);
      Index rr = 0;
      for (Index r = 0; r < n; ++r) {
        if (r == i) continue;
        Index cc = 0;
        for (Index c = 0; c < n; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = m(r, c);
        }
        ++rr;
      }
      const double cof =
          (((i + j) % 2 == 0) ? 1.0 : -1.0) * determinant_laplace(minor);
      inv(j, i) = cof / det;  // adjugate transposes the cofactor grid
    }
  }
  return inv;
}

Vector ls_on_support(const DenseMatrix& a, const Vector& y,
                     const std::vector<Index>& support) {
  const Index s = static_cast<Index>(support.size());
  if (s == 0) return Vector();
  if (s > 4)
    throw ValidationError("ls_on_support: oracle limited to support <= 4");
  DenseMatrix cols(a.rows(), s);
  for (Index k = 0; k < s; ++k)
    cols.col(k) = a.col(support[static_cast<std::size_t>(k)]);
  const DenseMatrix gram = cols.transpose() * cols;
  const Vector rhs = cols.transpose() * y;
  return inverse_ref(gram) * rhs;
}

std::vector<Index> best_support_ref(const DenseMatrix& a, const Vector& y,
                                    Index sparsity) {
  const Index n = a.cols();
  if (sparsity < 1 || sparsity > n)
    throw ValidationError("best_support_ref: need 1 <= sparsity <= cols");
  if (sparsity > 4)
    throw ValidationError("best_support_ref: oracle limited to sparsity <= 4");
  std::vector<Index> idx(static_cast<std::size_t>(sparsity));
  for (Index k = 0; k < sparsity; ++k) idx[static_cast<std::size_t>(k)] = k;
  std::vector<Index> best;
  double best_resid = std::numeric_limits<double>::infinity();
  for (;;) {
    try {
      const Vector c = ls_on_support(a, y, idx);
      Vector r = y;
      for (Index k = 0; k < sparsity; ++k)
        r -= c[k] * a.col(idx[static_cast<std::size_t>(k)]);
      const double resid = r.squaredNorm();
      if (resid < best_resid) {
        best_resid = resid;
        best = idx;
      }
    } catch (const SingularityError&) {
      // Collinear support columns: not a candidate.
    }
    // Advance to the next combination in lexicographic order.
    Index pos = sparsity - 1;
    while (pos >= 0 &&
           idx[static_cast<std::size_t>(pos)] == n - sparsity + pos)
      --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (Index k = pos + 1; k < sparsity; ++k)
      idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
  }
  return best;
}

}  // namespace isolab::oracles
