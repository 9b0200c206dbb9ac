#include "isolab/ensembles.hpp"

#include <cmath>

#include "isolab/isometry.hpp"

namespace isolab {

const char* to_string(GenTag tag) {
  switch (tag) {
    case GenTag::M1: return "M1";
    case GenTag::M2: return "M2";
    case GenTag::M3: return "M3";
    case GenTag::M4: return "M4";
    case GenTag::M5: return "M5";
    case GenTag::Identity: return "identity";
  }
  throw ValidationError("to_string: unknown GenTag");
}

const char* to_string(ScaleTag tag) {
  switch (tag) {
    case ScaleTag::R1: return "R1";
    case ScaleTag::R2: return "R2";
    case ScaleTag::R3: return "R3";
    case ScaleTag::R4: return "R4";
    case ScaleTag::R5: return "R5";
  }
  throw ValidationError("to_string: unknown ScaleTag");
}

GenTag gen_tag_from_string(std::string_view s) {
  if (s == "M1") return GenTag::M1;
  if (s == "M2") return GenTag::M2;
  if (s == "M3") return GenTag::M3;
  if (s == "M4") return GenTag::M4;
  if (s == "M5") return GenTag::M5;
  if (s == "identity" || s == "I") return GenTag::Identity;
  throw ValidationError("unknown generation method '" + std::string(s) +
                        "' (expected M1..M5 or identity)");
}

ScaleTag scale_tag_from_string(std::string_view s) {
  if (s == "R1") return ScaleTag::R1;
  if (s == "R2") return ScaleTag::R2;
  if (s == "R3") return ScaleTag::R3;
  if (s == "R4") return ScaleTag::R4;
  if (s == "R5") return ScaleTag::R5;
  throw ValidationError("unknown scaling rule '" + std::string(s) +
                        "' (expected R1..R5)");
}

namespace {

bool is_sparse_method(GenTag tag) {
  return tag == GenTag::M4 || tag == GenTag::M5;
}

}  // namespace

void validate(const WeightSpec& spec) {
  if (spec.rows < 1 || spec.cols < 1)
    throw ValidationError("WeightSpec: rows and cols must be positive, got " +
                          std::to_string(spec.rows) + "x" +
                          std::to_string(spec.cols));
  if (is_sparse_method(spec.gen.tag)) {
    const double f = spec.gen.sparsity_fraction;
    if (!(f > 0.0) || f > 1.0)
      throw ValidationError(
          "WeightSpec: sparsity_fraction must lie in (0, 1] for M4/M5");
  }
  if (spec.gen.tag == GenTag::Identity && spec.rows != spec.cols)
    throw ShapeError("WeightSpec: identity generator requires rows = cols");
  if ((spec.scale.tag == ScaleTag::R3 || spec.scale.tag == ScaleTag::R4) &&
      spec.rows != spec.cols)
    throw ShapeError("WeightSpec: " +
                     std::string(to_string(spec.scale.tag)) +
                     " requires a square matrix (rows = cols)");
  if (spec.scale.nii_samples < 1)
    throw ValidationError("WeightSpec: nii_samples must be >= 1");
}

DenseMatrix generate(const WeightSpec& spec) {
  validate(spec);
  RngStream rng(spec.seed);
  const Index rows = spec.rows, cols = spec.cols;
  DenseMatrix w = DenseMatrix::Zero(rows, cols);
  switch (spec.gen.tag) {
    case GenTag::M1:
      for (Index j = 0; j < cols; ++j) w.col(j) = rng.unit_sphere(rows);
      break;
    case GenTag::M2: {
      const double sd = std::sqrt(1.0 / double(rows));
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) w(i, j) = rng.normal(0.0, sd);
      break;
    }
    case GenTag::M3:
      for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) w(i, j) = rng.uniform_pm1();
      break;
    case GenTag::M4:
    case GenTag::M5: {
      const double total = double(rows) * double(cols);
      const Index nnz = static_cast<Index>(
          std::llround(spec.gen.sparsity_fraction * total));
      const auto positions =
          rng.sample_without_replacement(rows * cols, nnz);
      const double sd = std::sqrt(1.0 / double(rows));
      for (Index p : positions) {
        const double v = (spec.gen.tag == GenTag::M4)
                             ? rng.uniform_pm1()
                             : rng.normal(0.0, sd);
        w(p / cols, p % cols) = v;
      }
      break;
    }
    case GenTag::Identity:
      w.setIdentity();
      break;
  }
  if (!all_finite(w))
    throw NumericalError("generate: produced non-finite entries");
  return w;
}

double scale_factor(const ScaleMethod& method, const DenseMatrix& w,
                    RngStream& rng) {
  if (w.rows() == 0 || w.cols() == 0)
    throw ShapeError("scale_factor: empty matrix");
  if (!all_finite(w))
    throw ValidationError("scale_factor: matrix has non-finite entries");
  switch (method.tag) {
    case ScaleTag::R1:
      return 1.0;
    case ScaleTag::R2: {
      const IsometryInterval nii =
          estimate_nii(w, 1.0, method.nii_samples, rng);
      const double denom = nii.lower + nii.upper;
      if (!(denom > kDegenerateThreshold))
        throw DegenerateError(
            "scale_factor: R2 interval endpoints sum below threshold");
      return 2.0 / denom;
    }
    case ScaleTag::R3:
    case ScaleTag::R4: {
      if (w.rows() != w.cols())
        throw ShapeError("scale_factor: " +
                         std::string(to_string(method.tag)) +
                         " requires a square matrix");
      const double sr = spectral_radius(w);
      if (!(sr > kDegenerateThreshold))
        throw DegenerateError(
            "scale_factor: spectral radius below degeneracy threshold");
      const double r3 = 1.0 / sr;
      return method.tag == ScaleTag::R3 ? r3 : 0.9 * r3;
    }
    case ScaleTag::R5: {
      const double smax = largest_singular_value(w);
      if (!(smax > kDegenerateThreshold))
        throw DegenerateError(
            "scale_factor: largest singular value below degeneracy threshold");
      return 1.0 / smax;
    }
  }
  throw ValidationError("scale_factor: unknown ScaleTag");
}

RealizedWeights realize(const WeightSpec& spec, RngStream& scale_rng) {
  RealizedWeights out;
  out.w = generate(spec);
  out.rho = scale_factor(spec.scale, out.w, scale_rng);
  return out;
}

}  // namespace isolab
