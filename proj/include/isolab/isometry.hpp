#pragma once

#include <optional>

#include "isolab/numerics.hpp"

namespace isolab {

struct IsometryInterval {
  double lower = 0.0;
  double upper = 0.0;
  int samples = 0;
  std::optional<Index> restriction_sparsity;  // absent = unrestricted
};

// Monte-Carlo near-isometry interval: min and max of ||rho W x||_2 / ||x||_2
// over `samples` vectors x with entries i.i.d. uniform on [-1, 1].  The rho
// factor is applied to the endpoints after the reduction, so estimates on a
// shared stream are exactly scaling-equivariant.
IsometryInterval estimate_nii(const DenseMatrix& w, double rho, int samples,
                              RngStream& rng);

// Restricted variant: each sample has a uniformly random support of the given
// size with uniform [-1, 1] values on it.
IsometryInterval estimate_rii(const DenseMatrix& w, double rho, Index sparsity,
                              int samples, RngStream& rng);

// Exact [sigma_min, sigma_max] interval of rho W.  Diagnostic only: the
// Monte-Carlo estimators above are the canonical measurement and are tighter
// than this for large matrices.
IsometryInterval singular_interval(const DenseMatrix& w, double rho);

}  // namespace isolab
