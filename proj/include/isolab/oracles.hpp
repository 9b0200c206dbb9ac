#pragma once

#include <complex>
#include <vector>

#include "isolab/numerics.hpp"

// Brute-force reference implementations, deliberately independent of the
// production kernels: root-finding instead of QR, cofactor expansion instead
// of factorizations, exhaustive search instead of optimization.  Used by the
// test suites and the selfcheck subcommand.
namespace isolab::oracles {

// All roots of the monic polynomial z^n + c[0] z^{n-1} + ... + c[n-1]
// (Durand-Kerner iteration).  Intended for small n with simple roots.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs);

// Monic characteristic-polynomial coefficients of m (Faddeev-LeVerrier
// recurrence), returned as {c1, ..., cn}.  Guarded to n <= 6.
std::vector<double> char_poly(const DenseMatrix& m);

// max |root| of the characteristic polynomial.
double spectral_radius_ref(const DenseMatrix& m);

// sqrt of the largest characteristic root of the smaller Gram matrix.
double largest_singular_value_ref(const DenseMatrix& m);

// Inverse by adjugate over Laplace-expansion determinant, n <= 4.
DenseMatrix inverse_ref(const DenseMatrix& m);

// Least-squares coefficients on a fixed support (normal equations solved via
// inverse_ref; support size <= 4).
Vector ls_on_support(const DenseMatrix& a, const Vector& y,
                     const std::vector<Index>& support);

// Exhaustive search over all supports of the given size, returning the one
// (ascending indices) with the smallest least-squares residual.
std::vector<Index> best_support_ref(const DenseMatrix& a, const Vector& y,
                                    Index sparsity);

}  // namespace isolab::oracles
