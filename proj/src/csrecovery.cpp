#include "isolab/csrecovery.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>

namespace isolab {

Vector SparseSignal::dense() const {
  Vector v = Vector::Zero(dimension);
  for (std::size_t i = 0; i < support.size(); ++i) v[support[i]] = values[i];
  return v;
}

const char* to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::Optimal: return "optimal";
    case SolverStatus::MaxIterations: return "max-iterations";
    case SolverStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

const char* to_string(ConstraintForm f) {
  return f == ConstraintForm::Correlation ? "correlation" : "residual";
}

ConstraintForm constraint_form_from_string(std::string_view s) {
  if (s == "correlation") return ConstraintForm::Correlation;
  if (s == "residual") return ConstraintForm::Residual;
  throw ValidationError("unknown constraint form '" + std::string(s) +
                        "' (expected correlation or residual)");
}

SparseSignal gen_sparse_signal(Index dimension, Index sparsity,
                               RngStream& rng) {
  if (dimension < 1)
    throw ValidationError("gen_sparse_signal: dimension must be >= 1");
  if (sparsity < 0 || sparsity > dimension)
    throw ShapeError("gen_sparse_signal: need 0 <= sparsity <= dimension");
  SparseSignal s;
  s.dimension = dimension;
  s.support = rng.sample_without_replacement(dimension, sparsity);
  s.values.reserve(s.support.size());
  for (std::size_t i = 0; i < s.support.size(); ++i) {
    const double gamma = rng.rademacher();
    const double a = rng.normal();
    s.values.push_back(gamma * (1.0 + std::abs(a)));
  }
  return s;
}

CsInstance observe(const SparseSignal& signal, const DenseMatrix& sensing,
                   double rho, double noise_sigma, RngStream& rng) {
  if (sensing.cols() != signal.dimension)
    throw ShapeError("observe: sensing columns (" +
                     std::to_string(sensing.cols()) +
                     ") must match signal dimension (" +
                     std::to_string(signal.dimension) + ")");
  if (!(rho > 0) || !std::isfinite(rho))
    throw ValidationError("observe: rho must be finite and > 0");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
    throw ValidationError("observe: noise_sigma must be >= 0");
  if (!all_finite(sensing))
    throw ValidationError("observe: non-finite sensing entries");
  CsInstance inst;
  inst.signal = signal;
  inst.sensing = sensing;
  inst.rho = rho;
  inst.noise_sigma = noise_sigma;
  inst.noise_seed = rng.seed();
  inst.observations = rho * (sensing * signal.dense());
  if (noise_sigma > 0)
    for (Index i = 0; i < inst.observations.size(); ++i)
      inst.observations[i] += rng.normal(0.0, noise_sigma);
  return inst;
}

namespace {

// Interior-point solve of  min 1^T (u; v)  s.t.  |t(u - v) - q|_inf <= delta,
// u, v >= 0, where t is the constraint operator (t(w) = C^T C w for the
// correlation form, t(w) = C w for the residual form, C = rho W).
//
// Written as min c^T x, B x + s = h, x, s >= 0, the KKT normal matrix is
// D + Q R Q^T with the 2N x M factor Q = [C^T; -C^T], which the solver
// inverts through the push-through identity
//   (D + Q R Q^T)^{-1} = D^{-1} - D^{-1} Q (I + R T)^{-1} R Q^T D^{-1},
// T = Q^T D^{-1} Q, so every iteration costs O(M^2 N) instead of O(N^3).
// Feasibility / relative-duality-gap level certified by an optimal return.
constexpr double kCertTol = 1e-6;

class DantzigIpm {
 public:
  DantzigIpm(const DenseMatrix& c_mat, const Vector& y, double delta,
             const DantzigOptions& opts)
      : c_(c_mat),
        correlation_(opts.form == ConstraintForm::Correlation),
        opts_(opts),
        n_(c_mat.cols()),
        m_(c_mat.rows()),
        mh_(correlation_ ? n_ : m_) {
    q_ = correlation_ ? Vector(c_.transpose() * y) : y;
    h_.resize(2 * mh_);
    h_.head(mh_) = q_.array() + delta;
    h_.tail(mh_) = delta - q_.array();
    e_ = correlation_ ? DenseMatrix(c_.transpose() * c_) : c_;
    normal_.setZero(2 * mh_, 2 * mh_);
  }

  CsResult solve() {
    const Index n2 = 2 * n_;
    const Index m = 2 * mh_;
    Vector x = Vector::Ones(n2);
    Vector z = Vector::Ones(n2);
    Vector lam = Vector::Ones(m);
    Vector s = Vector::Constant(m, std::max(1.0, h_.lpNorm<Eigen::Infinity>()));

    CsResult res;
    res.solver_status = SolverStatus::MaxIterations;
    const double tol = opts_.tolerance;
    const double h_scale = 1.0 + h_.lpNorm<Eigen::Infinity>();
    // The answer is the best iterate seen, not the last: the normal system
    // turns singular at the very end of the path, and one step past the
    // achievable floor can throw the residuals far up again.
    Vector best_x = x;
    double best_merit = std::numeric_limits<double>::infinity();
    double best_gap = std::numeric_limits<double>::infinity();
    int iter = 0;
    for (; iter < opts_.max_iterations; ++iter) {
      const Vector w = x.head(n_) - x.tail(n_);
      const Vector tw = apply_t(w);
      Vector bx(m);
      bx.head(mh_) = tw;
      bx.tail(mh_) = -tw;
      const Vector rp = h_ - bx - s;
      const Vector btlam = apply_bt(lam);
      const Vector rd = z - btlam - Vector::Ones(n2);  // z - c - B^T lam

      const double mu = (x.dot(z) + lam.dot(s)) / double(n2 + m);
      const double pres = rp.lpNorm<Eigen::Infinity>() / h_scale;
      const double dres = rd.lpNorm<Eigen::Infinity>() / 2.0;
      const double gap =
          (x.dot(z) + lam.dot(s)) / (1.0 + std::abs(x.sum()));
      if (!std::isfinite(mu))
        throw NumericalError("dantzig_select: interior-point breakdown");
      // tol is the complementarity target; feasibility and the relative
      // duality gap are held to the certification level the result promises
      // (1e-6).  Near-degenerate boxes (tiny delta on noiseless data) floor
      // the primal residual around 1e-8 in double precision, so demanding
      // tol of all four would forfeit perfectly certified solutions.
      const double merit =
          std::max({pres / kCertTol, dres / kCertTol, gap / kCertTol,
                    mu / tol});
      if (merit < best_merit) {
        best_merit = merit;
        best_gap = gap;
        best_x = x;
      }
      if (best_merit <= 1.0) {
        res.solver_status = SolverStatus::Optimal;
        break;
      }
      // Divergence heuristic: duals exploding while primal residual stays
      // up means the constraint box is unreachable.
      if (lam.lpNorm<Eigen::Infinity>() > 1e13 && pres > std::sqrt(tol)) {
        res.solver_status = SolverStatus::Infeasible;
        break;
      }
      // Numerical floor: residuals shot far above the best pass, so further
      // Newton steps only amplify factorization noise.
      if (merit > 1e3 * std::max(best_merit, 1.0)) break;

      const Vector dinv = x.cwiseQuotient(z);   // X Z^{-1}
      const Vector sl = s.cwiseQuotient(lam);   // S Lambda^{-1}
      factorize(dinv, sl);

      // One eliminated Newton solve.  dlam comes from the SPD normal
      // equations; dx and dz are then defined so the x-complementarity and
      // dual-feasibility equations hold to roundoff whatever error the solve
      // left in dlam.  That error can only surface through ds, where it is
      // recovered coordinate-wise from whichever equation damps it: the
      // lam-complementarity form scales it by s/lam (safe on active
      // constraints), the primal-feasibility form by lam (safe on inactive
      // ones).
      const auto direction = [&](const Vector& rxz,
                                 const Vector& rls_over_lam,
                                 const Vector& rp_in, const Vector& rd_in,
                                 Vector& dx, Vector& ds, Vector& dlam,
                                 Vector& dz) {
        const Vector t1 = dinv.cwiseProduct(rxz + rd_in);
        const Vector rhs = apply_b(t1) + rls_over_lam - rp_in;
        dlam = ldlt_.solve(rhs);
        dlam += ldlt_.solve(rhs - normal_ * dlam);  // one refinement pass
        const Vector btdl = apply_bt(dlam);
        dx = dinv.cwiseProduct(rxz + rd_in - btdl);
        dz = btdl - rd_in;
        const Vector lin = rp_in - apply_b(dx);
        ds.resize(m);
        for (Index j = 0; j < m; ++j)
          ds[j] = lam[j] >= s[j] ? rls_over_lam[j] - sl[j] * dlam[j] : lin[j];
      };

      // The eliminated solve is only good to a few digits once the scaling
      // diagonal spans many orders of magnitude, so refine each direction
      // once against the unreduced Newton equations, whose residuals are
      // computable at full precision.
      const auto newton = [&](const Vector& rxz, const Vector& rls_over_lam,
                              Vector& dx, Vector& ds, Vector& dlam,
                              Vector& dz) {
        direction(rxz, rls_over_lam, rp, rd, dx, ds, dlam, dz);
        const Vector fa =
            rxz - z.cwiseQuotient(x).cwiseProduct(dx) - dz;
        const Vector fb = rls_over_lam - ds - sl.cwiseProduct(dlam);
        const Vector fc = rp - apply_b(dx) - ds;
        const Vector fd = apply_bt(dlam) - dz - rd;
        Vector cx, cs, clam, cz;
        direction(fa, fb, fc, -fd, cx, cs, clam, cz);
        dx += cx;
        ds += cs;
        dlam += clam;
        dz += cz;
      };

      // Predictor (affine scaling) direction.
      Vector dx, ds, dlam, dz;
      newton(-z, -s, dx, ds, dlam, dz);

      const double ap_aff = std::min(step_length(x, dx), step_length(s, ds));
      const double ad_aff =
          std::min(step_length(lam, dlam), step_length(z, dz));
      const double mu_aff =
          ((x + ap_aff * dx).dot(z + ad_aff * dz) +
           (lam + ad_aff * dlam).dot(s + ap_aff * ds)) /
          double(n2 + m);
      double sigma = mu_aff / mu;
      sigma = std::min(1.0, sigma * sigma * sigma);

      // Corrector: recenter and cancel the affine second-order terms.
      const Vector rxz =
          (Vector::Constant(n2, sigma * mu) - dx.cwiseProduct(dz))
              .cwiseQuotient(x) -
          z;
      const Vector rls_over_lam =
          (Vector::Constant(m, sigma * mu) - dlam.cwiseProduct(ds))
              .cwiseQuotient(lam) -
          s;
      newton(rxz, rls_over_lam, dx, ds, dlam, dz);

      const double eta = 0.99;
      const double ap =
          std::min(1.0, eta * std::min(step_length(x, dx), step_length(s, ds)));
      const double ad = std::min(
          1.0, eta * std::min(step_length(lam, dlam), step_length(z, dz)));
      if (ap < 1e-12 && ad < 1e-12) break;  // stalled; report best iterate
      x += ap * dx;
      s += ap * ds;
      lam += ad * dlam;
      z += ad * dz;
    }

    res.iterations = iter;
    res.duality_gap = best_gap;
    res.estimate = best_x.head(n_) - best_x.tail(n_);
    const Vector active = apply_t(res.estimate) - q_;
    res.constraint_violation = std::max(
        0.0, active.lpNorm<Eigen::Infinity>() -
                 (h_.head(mh_) - q_).lpNorm<Eigen::Infinity>());
    return res;
  }

 private:
  Vector apply_t(const Vector& w) const { return e_ * w; }

  Vector apply_t_adjoint(const Vector& g) const { return e_.transpose() * g; }

  // B x for x in R^{2n}: (t(u - v); -t(u - v)).
  Vector apply_b(const Vector& x) const {
    const Vector tw = apply_t(x.head(n_) - x.tail(n_));
    Vector out(2 * mh_);
    out.head(mh_) = tw;
    out.tail(mh_) = -tw;
    return out;
  }

  // B^T lam = (g; -g) with g = t_adj(lam_1 - lam_2).
  Vector apply_bt(const Vector& lam) const {
    const Vector g = apply_t_adjoint(lam.head(mh_) - lam.tail(mh_));
    Vector out(2 * n_);
    out.head(n_) = g;
    out.tail(n_) = -g;
    return out;
  }

  // Build and factor the SPD dual normal matrix B D^{-1} B^T + S Lam^{-1}.
  // B = [E, -E; -E, E] with E the half-constraint map, so the Gram part is
  // [G, -G; -G, G] with G = E (dinv_u + dinv_v) E^T; the slack weights on
  // the diagonal keep it positive definite even when G is rank deficient.
  void factorize(const Vector& dinv, const Vector& sl) {
    const Vector dinv_sum = dinv.head(n_) + dinv.tail(n_);
    g_mm_.noalias() = e_ * dinv_sum.asDiagonal() * e_.transpose();
    normal_.topLeftCorner(mh_, mh_) = g_mm_;
    normal_.topRightCorner(mh_, mh_) = -g_mm_;
    normal_.bottomLeftCorner(mh_, mh_) = -g_mm_;
    normal_.bottomRightCorner(mh_, mh_) = g_mm_;
    normal_.diagonal() += sl;
    ldlt_.compute(normal_);
  }

  static double step_length(const Vector& v, const Vector& dv) {
    double a = 1.0;
    for (Index i = 0; i < v.size(); ++i)
      if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
    return a;
  }

  DenseMatrix c_;
  bool correlation_;
  DantzigOptions opts_;
  Index n_, m_, mh_;
  Vector q_, h_;
  DenseMatrix e_, g_mm_, normal_;
  Eigen::LDLT<DenseMatrix> ldlt_;
};

}  // namespace

CsResult dantzig_select(const CsInstance& instance, double delta,
                        const DantzigOptions& opts) {
  if (!(delta > 0) || !std::isfinite(delta))
    throw ValidationError("dantzig_select: delta must be finite and > 0");
  if (instance.sensing.rows() != instance.observations.size())
    throw ShapeError("dantzig_select: observation length mismatch");
  if (opts.max_iterations < 1)
    throw ValidationError("dantzig_select: max_iterations must be >= 1");
  if (!(opts.tolerance > 0))
    throw ValidationError("dantzig_select: tolerance must be > 0");

  const DenseMatrix c = instance.rho * instance.sensing;
  DantzigIpm ipm(c, instance.observations, delta, opts);
  CsResult res = ipm.solve();
  res.constraint_level = delta;
  return res;
}

Vector refit_on_support(const CsInstance& instance, const Vector& estimate) {
  const Index n = instance.sensing.cols();
  const Index m = instance.sensing.rows();
  if (estimate.size() != n)
    throw ShapeError("refit_on_support: estimate dimension mismatch");
  if (instance.observations.size() != m)
    throw ShapeError("refit_on_support: observation length mismatch");

  const DenseMatrix a = instance.rho * instance.sensing;
  Vector col_norms(n);
  for (Index j = 0; j < n; ++j) col_norms[j] = a.col(j).norm();
  const double log_term =
      std::sqrt(2.0 * std::log(double(std::max<Index>(n, 2))));

  Vector x = estimate;
  for (int pass = 0; pass < 2; ++pass) {
    // The relative floor clears interior-point dust in noiseless runs,
    // where the sigma-based threshold degenerates to zero.
    const double floor = 1e-6 * x.lpNorm<Eigen::Infinity>();
    std::vector<Index> keep;
    for (Index j = 0; j < n; ++j) {
      if (!(col_norms[j] > 0)) continue;
      const double tau = std::max(
          instance.noise_sigma * log_term / col_norms[j], floor);
      if (std::abs(x[j]) > tau) keep.push_back(j);
    }
    if (keep.empty()) return Vector::Zero(n);
    if (Index(keep.size()) > m) return x;
    DenseMatrix as(m, Index(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k)
      as.col(Index(k)) = a.col(keep[k]);
    const Vector coef = as.colPivHouseholderQr().solve(instance.observations);
    x = Vector::Zero(n);
    for (std::size_t k = 0; k < keep.size(); ++k) x[keep[k]] = coef[Index(k)];
  }
  return x;
}

double ideal_mse(const SparseSignal& truth, const Vector& estimate,
                 double noise_sigma) {
  if (estimate.size() != truth.dimension)
    throw ShapeError("ideal_mse: estimate dimension mismatch");
  if (!(noise_sigma >= 0) || !std::isfinite(noise_sigma))
    throw ValidationError("ideal_mse: noise_sigma must be >= 0");
  const double sigma_sq = noise_sigma * noise_sigma;
  double denom = 0.0;
  for (double v : truth.values) denom += std::min(v * v, sigma_sq);
  if (!(denom > 0))
    throw DegenerateError(
        "ideal_mse: zero denominator (zero signal or zero sigma)");
  const double err = (truth.dense() - estimate).squaredNorm();
  return std::sqrt(err / denom);
}

}  // namespace isolab
