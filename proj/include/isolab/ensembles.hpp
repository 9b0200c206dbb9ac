#pragma once

#include <string>
#include <string_view>

#include "isolab/numerics.hpp"

namespace isolab {

// Generation methods.  M1: columns uniform on the unit sphere.  M2: entries
// N(0, 1/rows).  M3: entries uniform [-1, 1].  M4/M5: sparse positions chosen
// without replacement, values as in M3/M2.  Identity is a debug generator for
// estimator checks and sweeps, never part of the experiment grids.
enum class GenTag { M1, M2, M3, M4, M5, Identity };

enum class ScaleTag { R1, R2, R3, R4, R5 };

struct GenMethod {
  GenTag tag = GenTag::M1;
  double sparsity_fraction = 1.0;  // used by M4/M5; forced to 1 otherwise
};

struct ScaleMethod {
  ScaleTag tag = ScaleTag::R1;
  int nii_samples = 10000;  // used by R2 only
};

// Deterministic recipe for a scaled weight matrix.
struct WeightSpec {
  GenMethod gen{};
  ScaleMethod scale{};
  Index rows = 0;
  Index cols = 0;
  Seed seed{};
};

const char* to_string(GenTag tag);
const char* to_string(ScaleTag tag);
GenTag gen_tag_from_string(std::string_view s);
ScaleTag scale_tag_from_string(std::string_view s);

// Throws ValidationError / ShapeError naming the violated invariant.
void validate(const WeightSpec& spec);

// Unscaled weight matrix for the spec (deterministic in spec.seed).
DenseMatrix generate(const WeightSpec& spec);

// Scale factor rho for the given rule.  R1 -> 1; R2 -> 2/(a+b) with [a, b]
// estimated on the unscaled matrix; R3 -> 1/spectral radius; R4 -> 0.9 x the
// R3 value exactly; R5 -> 1/largest singular value.  The rng is consumed by
// R2 only.
double scale_factor(const ScaleMethod& method, const DenseMatrix& w,
                    RngStream& rng);

struct RealizedWeights {
  DenseMatrix w;  // unscaled
  double rho = 1.0;
};

// generate + scale_factor in one step.
RealizedWeights realize(const WeightSpec& spec, RngStream& scale_rng);

}  // namespace isolab
