#include "ssv/scaling.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "ssv/certificates.h"

namespace ssv {

Scaling::Scaling(BlockStructure structure, std::vector<double> d)
    : structure_(std::move(structure)), d_(std::move(d)) {
  if (static_cast<int>(d_.size()) != structure_.num_full()) {
    throw std::invalid_argument("Scaling: need one d_j per full block");
  }
  for (double v : d_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("Scaling: d_j must be positive and finite");
    }
  }
  if (!d_.empty()) {
    const double last = d_.back();
    for (double& v : d_) v /= last;
  }
}

Scaling Scaling::Identity(const BlockStructure& structure) {
  return Scaling(structure, std::vector<double>(structure.num_full(), 1.0));
}

Scaling Scaling::FromLog(const BlockStructure& structure,
                         const Eigen::VectorXd& log_d) {
  const int f = structure.num_full();
  if (log_d.size() != std::max(f - 1, 0)) {
    throw std::invalid_argument("Scaling::FromLog: need F-1 log-scalings");
  }
  std::vector<double> d(f, 1.0);
  for (int j = 0; j + 1 < f; ++j) d[j] = std::exp(log_d(j));
  return Scaling(structure, std::move(d));
}

Eigen::VectorXd Scaling::expanded() const {
  Eigen::VectorXd out = Eigen::VectorXd::Ones(structure_.n());
  const int s = structure_.num_scalar();
  for (int j = s; j < structure_.num_blocks(); ++j) {
    out.segment(structure_.offset(j), structure_.size(j)).setConstant(d_[j - s]);
  }
  return out;
}

ComplexMatrix apply_scaling(const ComplexMatrix& m, const Scaling& d) {
  if (m.rows() != d.structure().n() || m.cols() != d.structure().n()) {
    throw std::invalid_argument("apply_scaling: dimension mismatch");
  }
  const Eigen::VectorXd half = d.expanded().cwiseSqrt();
  const Eigen::VectorXd inv_half = half.cwiseInverse();
  Eigen::MatrixXcd w = half.cast<Complex>().asDiagonal() * m.entries() *
                       inv_half.cast<Complex>().asDiagonal();
  return ComplexMatrix(std::move(w));
}

namespace {

// sigma_max(e^{X/2} M e^{-X/2}) as a function of the F-1 free log-scalings.
class ScaledObjective {
 public:
  ScaledObjective(const ComplexMatrix& m, const BlockStructure& structure)
      : m_(m), structure_(structure), dim_(structure.num_full() - 1) {
    const int n = structure.n();
    masks_.assign(dim_, Eigen::VectorXd::Zero(n));
    for (int j = 0; j < dim_; ++j) {
      masks_[j].segment(structure.offset(j), structure.size(j)).setOnes();
    }
  }

  int dim() const { return dim_; }
  bool is_real() const { return m_.is_real(); }
  const Eigen::VectorXd& mask(int j) const { return masks_[j]; }

  Eigen::MatrixXcd scaled(const Eigen::VectorXd& x) const {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(structure_.n());
    for (int j = 0; j < dim_; ++j) row += x(j) * masks_[j];
    const Eigen::VectorXd half = (0.5 * row).array().exp();
    const Eigen::VectorXd inv = (-0.5 * row).array().exp();
    return half.cast<Complex>().asDiagonal() * m_.entries() *
           inv.cast<Complex>().asDiagonal();
  }

  double value(const Eigen::VectorXd& x) const {
    return sigma_max(ComplexMatrix(scaled(x)));
  }

  // Value and the subgradient sigma1/2 (|u_j|^2 - |v_j|^2).
  std::pair<double, Eigen::VectorXd> value_and_subgradient(
      const Eigen::VectorXd& x) const {
    const Svd s = svd(ComplexMatrix(scaled(x)));
    const double sigma = s.values.front();
    const Eigen::VectorXcd u = s.left.entries().col(0);
    const Eigen::VectorXcd v = s.right.entries().col(0);
    Eigen::VectorXd g(dim_);
    for (int j = 0; j < dim_; ++j) {
      g(j) = 0.5 * sigma *
             (masks_[j].dot(u.cwiseAbs2()) - masks_[j].dot(v.cwiseAbs2()));
    }
    return {sigma, g};
  }

 private:
  const ComplexMatrix& m_;
  const BlockStructure& structure_;
  int dim_;
  std::vector<Eigen::VectorXd> masks_;
};

struct PhaseOne {
  Eigen::VectorXd x;
  double f = 0.0;
  double lower = -std::numeric_limits<double>::infinity();
  int iterations = 0;
};

// Central-cut ellipsoid method (bisection when there is one variable).
PhaseOne minimize_ellipsoid(const ScaledObjective& obj, const NuOptions& opts,
                            double target, std::vector<double>& history) {
  const int m = obj.dim();
  PhaseOne best;
  best.x = Eigen::VectorXd::Zero(m);
  best.f = std::numeric_limits<double>::infinity();

  auto consider = [&](const Eigen::VectorXd& x, double f) {
    if (f < best.f) {
      best.f = f;
      best.x = x;
      history.push_back(f);
    }
  };

  if (m == 1) {
    double lo = -opts.log_radius;
    double hi = opts.log_radius;
    Eigen::VectorXd c(1);
    for (int it = 0; it < opts.max_iterations; ++it) {
      c(0) = 0.5 * (lo + hi);
      const auto [f, g] = obj.value_and_subgradient(c);
      consider(c, f);
      ++best.iterations;
      best.lower = std::max(best.lower, f - std::abs(g(0)) * (hi - lo));
      if (g(0) == 0.0 || hi - lo < 1e-15 * (1.0 + std::abs(c(0)))) break;
      if (g(0) > 0) {
        hi = c(0);
      } else {
        lo = c(0);
      }
      if (best.f - best.lower <= target) break;
    }
    return best;
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd p =
      Eigen::MatrixXd::Identity(m, m) * (opts.log_radius * opts.log_radius);
  const double md = m;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const auto [f, g] = obj.value_and_subgradient(c);
    consider(c, f);
    ++best.iterations;
    const Eigen::VectorXd pg = p * g;
    const double gpg = g.dot(pg);
    if (!(gpg > 0.0)) {
      // Zero subgradient: c is a minimizer.
      best.lower = best.f;
      break;
    }
    const double width = std::sqrt(gpg);
    best.lower = std::max(best.lower, f - width);
    if (best.f - best.lower <= target) break;
    const Eigen::VectorXd step = pg / width;
    c -= step / (md + 1.0);
    p = (md * md / (md * md - 1.0)) *
        (p - (2.0 / (md + 1.0)) * step * step.transpose());
    p = 0.5 * (p + p.transpose());
  }
  return best;
}

// Newton iteration on the optimality system of min lambda_max(W^* W) with the
// top r eigenvalues forced to coalesce:
//   minimize t  subject to  Q^* A(x) Q = t I_r,
// with Lagrange multiplier X (trace one). The Hessian of <X, reduced matrix>
// includes the coupling to the eigenvalues outside the cluster.
struct Polished {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  bool ok = false;
};

Polished polish(const ScaledObjective& obj, const Eigen::VectorXd& x0, int r) {
  const int m = obj.dim();
  const Field field = obj.is_real() ? Field::kReal : Field::kComplex;
  const int dim_r = herm_space_dim(r, field);

  Polished out;
  out.x = x0;
  out.f = obj.value(x0);

  Eigen::VectorXd x = x0;
  HermMatrix mult = HermMatrix::Identity(r) * (1.0 / r);
  Eigen::MatrixXcd q_prev;
  double f = out.f;
  bool converged = false;

  for (int it = 0; it < 60; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXcd w = obj.scaled(x);
    const Eigen::MatrixXcd a_mat = w.adjoint() * w;
    const HermMatrix a = obj.is_real() ? HermMatrix(Eigen::MatrixXd(a_mat.real()))
                                       : HermMatrix(a_mat);
    const Eigh e = eigh(a);
    const int n = a.dim();
    if (r > n) return out;
    if (r < n && !(e.values[r - 1] > e.values[r])) return out;
    double t = 0.0;
    for (int i = 0; i < r; ++i) t += e.values[i] / r;

    const Eigen::MatrixXcd& qa = e.vectors.entries();
    const Eigen::MatrixXcd q = qa.leftCols(r);
    const Eigen::MatrixXcd qt = qa.rightCols(n - r);
    if (q_prev.size() != 0) {
      const Eigen::MatrixXcd tr = q.adjoint() * q_prev;
      mult = HermMatrix(Eigen::MatrixXcd(tr * mult.entries() * tr.adjoint()));
      if (field == Field::kReal) mult = mult.real_part();
    }
    q_prev = q;

    std::vector<Eigen::MatrixXcd> dw(m), da(m), c(m);
    std::vector<HermMatrix> g(m);
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXcd s = obj.mask(j).cast<Complex>();
      dw[j] = 0.5 * (s.asDiagonal() * w - w * s.asDiagonal());
      da[j] = dw[j].adjoint() * w + w.adjoint() * dw[j];
      g[j] = HermMatrix(Eigen::MatrixXcd(q.adjoint() * da[j] * q));
      if (field == Field::kReal) g[j] = g[j].real_part();
      c[j] = qt.adjoint() * da[j] * q;
    }
    Eigen::VectorXd dinv(n - r);
    for (int k = 0; k < n - r; ++k) dinv(k) = 1.0 / (t - e.values[r + k]);

    Eigen::MatrixXd h(m, m);
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXcd si = obj.mask(i).cast<Complex>();
      for (int j = i; j < m; ++j) {
        const Eigen::VectorXcd sj = obj.mask(j).cast<Complex>();
        Eigen::MatrixXcd d2w = -(si.asDiagonal() * w * sj.asDiagonal()) -
                               (sj.asDiagonal() * w * si.asDiagonal());
        if (i == j) d2w += si.asDiagonal() * w + w * si.asDiagonal();
        d2w *= 0.25;
        const Eigen::MatrixXcd d2a = d2w.adjoint() * w + dw[i].adjoint() * dw[j] +
                                     dw[j].adjoint() * dw[i] + w.adjoint() * d2w;
        const Eigen::MatrixXcd red = q.adjoint() * d2a * q;
        double hij = (mult.entries().array() * red.transpose().array()).sum().real();
        const Eigen::MatrixXcd coupling =
            c[i].adjoint() * dinv.cast<Complex>().asDiagonal() * c[j];
        hij += 2.0 * (mult.entries() * coupling).trace().real();
        h(i, j) = hij;
        h(j, i) = hij;
      }
    }

    // [ H    G    0 ] [dx ]   [ 0 ]
    // [ G^T  0   -e ] [X  ] = [ -c]
    // [ 0    e^T  0 ] [tau]   [ 1 ]
    const int size = m + dim_r + 1;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(size, size);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size);
    kkt.topLeftCorner(m, m) = h;
    for (int j = 0; j < m; ++j) {
      const Eigen::VectorXd gv = vectorize(g[j], field);
      kkt.block(j, m, 1, dim_r) = gv.transpose();
      kkt.block(m, j, dim_r, 1) = gv;
    }
    const Eigen::VectorXd ev = vectorize(HermMatrix::Identity(r), field);
    kkt.block(m, m + dim_r, dim_r, 1) = -ev;
    kkt.block(m + dim_r, m, 1, dim_r) = ev.transpose();
    Eigen::MatrixXd red0 = Eigen::MatrixXd::Zero(r, r);
    for (int i = 0; i < r; ++i) red0(i, i) = e.values[i];
    rhs.segment(m, dim_r) = -vectorize(HermMatrix(red0), field);
    rhs(m + dim_r) = 1.0;
    const Eigen::VectorXd sol =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(kkt).solve(rhs);
    const Eigen::VectorXd dx = sol.head(m);
    if (!dx.allFinite()) return out;
    mult = unvectorize(sol.segment(m, dim_r), r, field);

    // Backtrack on the objective itself.
    double alpha = 1.0;
    double f_new = obj.value(x + dx);
    while (f_new > f * (1.0 + 1e-14) && alpha > 1e-4) {
      alpha *= 0.5;
      f_new = obj.value(x + alpha * dx);
    }
    if (f_new > f * (1.0 + 1e-14)) break;
    x += alpha * dx;
    f = std::min(f, f_new);
    if (f_new <= out.f) {
      out.f = f_new;
      out.x = x;
    }
    if (alpha * dx.norm() <= 1e-13 * (1.0 + x.norm())) {
      converged = true;
      // Values this close are rounding noise; the Newton iterate is stationary.
      if (f_new <= out.f * (1.0 + 1e-14)) {
        out.x = x;
        out.f = obj.value(x);
      }
      break;
    }
  }

  // The cluster must have coalesced and the multiplier be PSD.
  const Svd s = svd(ComplexMatrix(obj.scaled(out.x)));
  const double spread = (s.values[0] - s.values[r - 1]) / s.values[0];
  const bool separated =
      r == static_cast<int>(s.values.size()) ||
      (s.values[0] - s.values[r]) >
          std::max(1e3 * (s.values[0] - s.values[r - 1]), 1e-6 * s.values[0]);
  out.ok = converged && spread <= 1e-10 && separated &&
           lambda_min(mult) >= -1e-8;
  return out;
}

int max_generic_multiplicity(int m, int n, Field field) {
  int r = 1;
  while (r + 1 <= n && herm_space_dim(r + 1, field) - 1 <= m) ++r;
  return r;
}

}  // namespace

NuResult nu_upper(const ComplexMatrix& m, const BlockStructure& structure,
                  const NuOptions& opts) {
  if (!structure.full_only()) {
    throw UnsupportedStructure(
        "nu_upper: repeated-scalar blocks are not supported");
  }
  if (m.rows() != structure.n() || m.cols() != structure.n()) {
    throw std::invalid_argument("nu_upper: dimension mismatch");
  }
  NuResult out;
  const ScaledObjective obj(m, structure);
  const int dim = obj.dim();

  Eigen::VectorXd x_best = Eigen::VectorXd::Zero(dim);
  if (dim == 0) {
    out.nu = sigma_max(m);
    out.history.push_back(out.nu);
    out.iterations = 1;
    out.converged = true;
  } else {
    const double f0 = obj.value(x_best);
    const double target = 1e-2 * opts.tol * std::max(f0, 1e-300);
    PhaseOne p1 = minimize_ellipsoid(obj, opts, target, out.history);
    out.iterations = p1.iterations;
    x_best = p1.x;
    double f_best = p1.f;
    bool certified = p1.f - p1.lower <= opts.tol * std::max(p1.f, 1e-300);

    const Field field = m.is_real() ? Field::kReal : Field::kComplex;
    if (f_best > 0.0) {
      // Try each plausible active multiplicity, tightest clusters first.
      const Svd s = svd(ComplexMatrix(obj.scaled(x_best)));
      const int n = static_cast<int>(s.values.size());
      const int r_max = max_generic_multiplicity(dim, n, field);
      std::vector<int> candidates;
      for (int r = 1; r <= r_max; ++r) candidates.push_back(r);
      auto spread_ratio = [&](int r) {
        const double inside = s.values[0] - s.values[r - 1];
        const double gap = r < n ? s.values[r - 1] - s.values[r] : s.values[0];
        return inside / std::max(gap, 1e-300);
      };
      std::stable_sort(candidates.begin(), candidates.end(),
                       [&](int a, int b) { return spread_ratio(a) < spread_ratio(b); });
      for (int r : candidates) {
        const Polished pol = polish(obj, x_best, r);
        out.iterations += pol.iterations;
        if (pol.ok && pol.f <= f_best * (1.0 + 1e-12)) {
          if (pol.f < f_best) out.history.push_back(pol.f);
          x_best = pol.x;
          f_best = std::min(f_best, pol.f);
          certified = true;
          break;
        }
      }
    }
    out.converged = certified;
    out.nu = obj.value(x_best);
  }
  out.d_opt = Scaling::FromLog(structure, x_best);

  if (out.nu > 0.0) {
    const ComplexMatrix w = apply_scaling(m, out.d_opt);
    const TopSvd top = top_svd(w, opts.cluster_tol);
    const ScalingCheck check = check_scaling(build_pset(top, structure));
    out.gap_estimate = check.lambda;
    if (check.optimal && !check.marginal) out.converged = true;
    if (!check.optimal) out.converged = false;
  }
  return out;
}

}  // namespace ssv
