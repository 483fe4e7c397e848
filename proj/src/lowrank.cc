#include "ssv/lowrank.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ssv {

namespace {

Field field_of(const HermMatrix& x, Field requested) {
  return requested == Field::kReal && x.is_real() ? Field::kReal
                                                  : Field::kComplex;
}

// Euclidean projection of v onto the probability simplex.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  std::vector<double> s(v.data(), v.data() + v.size());
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double theta = 0.0;
  for (size_t i = 0; i < s.size(); ++i) {
    cumsum += s[i];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (s[i] - t > 0) theta = t;
  }
  return (v.array() - theta).cwiseMax(0.0);
}

// Projection onto {X PSD, trace X = 1}, in vectorized coordinates.
Eigen::VectorXd project_spectraplex(const Eigen::VectorXd& v, int r, Field field) {
  const Eigh e = eigh(unvectorize(v, r, field));
  const Eigen::VectorXd lam = Eigen::Map<const Eigen::VectorXd>(
      e.values.data(), static_cast<Eigen::Index>(e.values.size()));
  const Eigen::VectorXd p = project_simplex(lam);
  const Eigen::MatrixXcd& q = e.vectors.entries();
  return vectorize(HermMatrix(Eigen::MatrixXcd(q * p.cast<Complex>().asDiagonal() *
                                               q.adjoint())),
                   field);
}

Eigen::VectorXd project_psd_vec(const Eigen::VectorXd& v, int r, Field field) {
  return vectorize(project_psd(unvectorize(v, r, field)), field);
}

Eigen::MatrixXd stack(std::span<const HermMatrix> members, Field field) {
  if (members.empty()) return {};
  const int d = herm_space_dim(members.front().dim(), field);
  Eigen::MatrixXd out(d, static_cast<Eigen::Index>(members.size()));
  for (size_t j = 0; j < members.size(); ++j) {
    out.col(static_cast<Eigen::Index>(j)) = vectorize(members[j], field);
  }
  return out;
}

double max_abs_inner(std::span<const HermMatrix> p_list, const HermMatrix& x) {
  double worst = 0.0;
  for (const HermMatrix& p : p_list) worst = std::max(worst, std::abs(inner(p, x)));
  return worst;
}

void check_inputs(std::span<const HermMatrix> p_list, int r, Field field) {
  if (r < 1) throw std::invalid_argument("dimension r must be positive");
  for (const HermMatrix& p : p_list) {
    if (p.dim() != r) throw std::invalid_argument("P_list dimension mismatch");
    if (field == Field::kReal && !p.is_real()) {
      throw std::invalid_argument("real field requires real P_list members");
    }
  }
}

// Least-norm correction inside the face spanned by the eigenvectors Q of X
// with eigenvalues above tol * lambda_max: X' = Q (Lambda + Y) Q^* with
// <Q^* B Q, Y> = -<B, X_face> for every basis member and trace X' = 1,
// alternated with clipping Lambda + Y to the PSD cone.
HermMatrix restore_in_face(const HermMatrix& x, std::span<const HermMatrix> basis,
                           Field field, double tol) {
  const Eigh e = eigh(x);
  const double lam_max = std::max(e.values.front(), 0.0);
  int p = 0;
  while (p < x.dim() && e.values[p] > tol * lam_max) ++p;
  if (p == 0) return x;
  const Eigen::MatrixXcd q = e.vectors.entries().leftCols(p);
  const int d = herm_space_dim(p, field);
  const auto k = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd a(k + 1, d);
  for (Eigen::Index j = 0; j <= k; ++j) {
    HermMatrix c(j < k ? Eigen::MatrixXcd(q.adjoint() * basis[j].entries() * q)
                       : Eigen::MatrixXcd(Eigen::MatrixXcd::Identity(p, p)));
    if (field == Field::kReal) c = c.real_part();
    a.row(j) = vectorize(c, field).transpose();
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  Eigen::VectorXd target = Eigen::VectorXd::Zero(k + 1);
  target(k) = 1.0;
  Eigen::MatrixXd lam0 = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) lam0(i, i) = e.values[i];
  HermMatrix inner_x(lam0);
  for (int round = 0; round < 5; ++round) {
    const Eigen::VectorXd v = vectorize(inner_x, field);
    const Eigen::VectorXd fix = cod.solve(target - a * v);
    inner_x = project_psd(unvectorize(v + fix, p, field));
  }
  HermMatrix out(Eigen::MatrixXcd(q * inner_x.entries() * q.adjoint()));
  if (field == Field::kReal) out = out.real_part();
  return out;
}

// Best of the face corrections over a few truncation levels.
HermMatrix restore_constraints(const HermMatrix& x, std::span<const HermMatrix> basis,
                               Field field) {
  const auto err = [&](const HermMatrix& m) {
    return std::max(max_abs_inner(basis, m), std::abs(m.trace() - 1.0));
  };
  HermMatrix best = x;
  double best_err = err(x);
  for (double tol : {1e-12, 1e-9, 1e-6}) {
    const HermMatrix cand = restore_in_face(x, basis, field, tol);
    const double c_err = err(cand);
    if (c_err < best_err) {
      best = cand;
      best_err = c_err;
    }
    if (best_err <= 1e-15) break;
  }
  return best;
}

// Factor of the numerically nonzero part of X.
Eigen::MatrixXcd psd_factor(const HermMatrix& x, double rank_tol) {
  const Eigh e = eigh(x);
  const double lam_max = std::max(e.values.front(), 0.0);
  std::vector<int> keep;
  for (int i = 0; i < x.dim(); ++i) {
    if (e.values[i] > rank_tol * lam_max) keep.push_back(i);
  }
  Eigen::MatrixXcd g(x.dim(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c) {
    g.col(static_cast<Eigen::Index>(c)) =
        e.vectors.entries().col(keep[c]) * std::sqrt(e.values[keep[c]]);
  }
  return g;
}

}  // namespace

const char* to_string(FeasibilityStatus status) {
  switch (status) {
    case FeasibilityStatus::kFound:
      return "found";
    case FeasibilityStatus::kInfeasible:
      return "infeasible";
    case FeasibilityStatus::kStalled:
      return "stalled";
  }
  return "?";
}

PdIntersection pd_intersection(std::span<const HermMatrix> p_list, int r,
                               Field field, const LowRankOptions& opts) {
  check_inputs(p_list, r, field);
  PdIntersection out;
  out.basis = span_basis(p_list, r, field, opts.numerics);
  const auto k = static_cast<Eigen::Index>(out.basis.size());
  out.z = Eigen::VectorXd::Zero(k);
  if (k == 0) return out;

  // lambda = max_{|z|<=1} lambda_min(sum z_j B_j)
  //        = min_{X PSD, tr X = 1} |B^T vec(X)|   (minimax over compact sets).
  // The right-hand side is minimized by accelerated projected gradient; every
  // iterate X yields an upper bound, and z = B^T x / |B^T x| a lower bound.
  const Eigen::MatrixXd b = stack(out.basis, field);
  Eigen::VectorXd x = vectorize(HermMatrix::Identity(r) * (1.0 / r), field);
  Eigen::VectorXd x_prev = x;
  double t = 1.0;
  double obj = 0.5 * (b.transpose() * x).squaredNorm();
  double best_up = std::sqrt(2.0 * obj);
  double best_low = 0.0;

  auto lower_bound = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd ax = b.transpose() * v;
    const double nrm = ax.norm();
    if (nrm <= 0.0) return;
    const Eigen::VectorXd zhat = ax / nrm;
    const double low = lambda_min(unvectorize(b * zhat, r, field));
    if (low > best_low) {
      best_low = low;
      out.z = zhat;
    }
  };
  lower_bound(x);

  int it = 0;
  for (; it < opts.max_lambda_iterations; ++it) {
    if (best_up - best_low <= opts.lambda_accuracy) break;
    if (opts.stop.stop_requested()) break;
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const Eigen::VectorXd y = x + ((t - 1.0) / t_next) * (x - x_prev);
    const Eigen::VectorXd grad = b * (b.transpose() * y);
    Eigen::VectorXd x_new = project_spectraplex(y - grad, r, field);
    const double obj_new = 0.5 * (b.transpose() * x_new).squaredNorm();
    if (obj_new > obj) {
      // Adaptive restart: plain projected-gradient step from x.
      x_new = project_spectraplex(x - b * (b.transpose() * x), r, field);
      t = 1.0;
      x_prev = x;
      x = x_new;
      obj = 0.5 * (b.transpose() * x).squaredNorm();
    } else {
      t = t_next;
      x_prev = x;
      x = x_new;
      obj = obj_new;
    }
    best_up = std::min(best_up, std::sqrt(2.0 * obj));
    lower_bound(x);
  }
  out.iterations = it;
  out.upper_bound = best_up;
  out.lambda = best_low;
  out.intersects = out.lambda > opts.pd_threshold;
  return out;
}

FeasibilityResult find_psd_orthogonal(std::span<const HermMatrix> p_list, int r,
                                      Field field, const LowRankOptions& opts) {
  check_inputs(p_list, r, field);
  FeasibilityResult out;
  const PdIntersection pd = pd_intersection(p_list, r, field, opts);
  if (pd.intersects) {
    out.status = FeasibilityStatus::kInfeasible;
    out.x = HermMatrix::Zero(r);
    out.residual = pd.lambda;
    return out;
  }

  // Affine set {B^T x = 0, e^T x = 1} with e = vec(I).
  const int d = herm_space_dim(r, field);
  const auto k = static_cast<Eigen::Index>(pd.basis.size());
  Eigen::MatrixXd c(k + 1, d);
  if (k > 0) c.topRows(k) = stack(pd.basis, field).transpose();
  c.row(k) = vectorize(HermMatrix::Identity(r), field).transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
  rhs(k) = 1.0;
  const Eigen::MatrixXd c_pinv =
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(c).pseudoInverse();
  auto project_affine = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v - c_pinv * (c * v - rhs);
  };
  // Measured against the caller's members, as in the final check.
  const Eigen::MatrixXd p_rows = p_list.empty()
                                     ? Eigen::MatrixXd(0, d)
                                     : Eigen::MatrixXd(stack(p_list, field).transpose());
  auto residual = [&](const Eigen::VectorXd& v) {
    const double tr = std::abs(c.row(k).dot(v) - 1.0);
    return p_rows.rows() == 0 ? tr : std::max(tr, (p_rows * v).cwiseAbs().maxCoeff());
  };

  Eigen::VectorXd x = vectorize(HermMatrix::Identity(r) * (1.0 / r), field);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(d);
  double res = residual(x);
  int it = 0;
  bool converged = false;
  for (; it < opts.max_iterations; ++it) {
    if (opts.stop.stop_requested()) break;
    // The affine set needs no Dykstra correction; the cone does.
    const Eigen::VectorXd y = project_affine(x);
    const Eigen::VectorXd x_new = project_psd_vec(y + q, r, field);
    q = y + q - x_new;
    const double change = (x_new - x).norm();
    x = x_new;
    res = residual(x);
    if (change < opts.change_tol && res < 0.5 * opts.residual_tol) {
      converged = true;
      ++it;
      break;
    }
    if (res == 0.0) {
      converged = true;
      ++it;
      break;
    }
  }
  out.iterations = it;
  HermMatrix xm = unvectorize(x, r, field);
  const double tr = xm.trace();
  if (tr > 0) xm = xm * (1.0 / tr);
  xm = restore_constraints(xm, pd.basis, field);
  out.x = xm;
  out.residual = std::max(max_abs_inner(p_list, xm), std::abs(xm.trace() - 1.0));
  const double min_eig = lambda_min(xm);
  if ((converged || out.residual <= opts.residual_tol) &&
      out.residual <= opts.residual_tol && min_eig >= -opts.residual_tol) {
    out.status = FeasibilityStatus::kFound;
  } else {
    out.status = FeasibilityStatus::kStalled;
  }
  return out;
}

RankBound make_rank_bound(int dim_l, Field field) {
  RankBound b;
  b.field = field;
  b.dim_l = dim_l;
  b.q = 0;
  while (!rank_bound_holds(b.q, dim_l, field)) ++b.q;
  return b;
}

bool rank_bound_holds(int q, int dim_l, Field field) {
  const int cap = field == Field::kReal ? (q + 1) * (q + 2) / 2 - 2
                                        : (q + 1) * (q + 1) - 2;
  return dim_l <= cap;
}

RankReduction rank_reduce(const HermMatrix& x, std::span<const HermMatrix> p_list,
                          const RankBound& target, const LowRankOptions& opts) {
  const int r = x.dim();
  const Field field = field_of(x, target.field);
  check_inputs(p_list, r, Field::kComplex);
  const std::vector<HermMatrix> basis =
      span_basis(p_list, r, Field::kComplex, opts.numerics);

  RankReduction out;
  out.bound_guaranteed =
      rank_bound_holds(target.q, static_cast<int>(basis.size()), target.field);

  // Factor X = G G^* with the numerically zero eigenvalues dropped.
  Eigen::MatrixXcd g = psd_factor(x, opts.rank_tol);
  if (field == Field::kReal) g = g.real().cast<Complex>();

  auto assemble = [&](const Eigen::MatrixXcd& f) {
    const Eigen::MatrixXcd xx = f * f.adjoint();
    return field == Field::kReal ? HermMatrix(Eigen::MatrixXd(xx.real()))
                                 : HermMatrix(xx);
  };
  auto record = [&](const Eigen::MatrixXcd& f) {
    const HermMatrix xx = assemble(f);
    out.steps.push_back({static_cast<int>(f.cols()), max_abs_inner(p_list, xx),
                         lambda_min(xx), xx.trace()});
  };
  record(g);

  while (g.cols() > 1) {
    if (opts.stop.stop_requested()) break;
    const auto p = static_cast<int>(g.cols());
    // Compressed constraints G^* P G, plus G^* G so the trace is preserved.
    std::vector<HermMatrix> compressed;
    compressed.reserve(basis.size() + 1);
    for (const HermMatrix& b : basis) {
      compressed.emplace_back(Eigen::MatrixXcd(g.adjoint() * b.entries() * g));
    }
    compressed.emplace_back(Eigen::MatrixXcd(g.adjoint() * g));
    if (field == Field::kReal) {
      for (HermMatrix& c : compressed) c = c.real_part();
    }
    const std::vector<HermMatrix> null_dirs =
        orthonormal_complement(compressed, p, field, opts.numerics);
    if (null_dirs.empty()) break;

    // Pick the direction (and sign) that maximizes lambda_max(Y) / |Y|_F;
    // basis elements have unit norm. Ties go to the first candidate.
    HermMatrix best_y;
    double best_score = 0.0;
    for (const HermMatrix& y : null_dirs) {
      const Eigh ey = eigh(y);
      if (ey.values.front() > best_score * (1.0 + 1e-12)) {
        best_score = ey.values.front();
        best_y = y;
      }
      if (-ey.values.back() > best_score * (1.0 + 1e-12)) {
        best_score = -ey.values.back();
        best_y = y * -1.0;
      }
    }
    if (best_score <= 0.0) break;

    // X' = G (I - tY) G^*, t = 1 / lambda_max(Y). I - tY is PSD and singular.
    const Eigen::MatrixXcd z =
        Eigen::MatrixXcd::Identity(p, p) - best_y.entries() / best_score;
    const Eigh ez = eigh(HermMatrix(z));
    const double z_max = ez.values.front();
    std::vector<int> zkeep;
    for (int i = 0; i < p; ++i) {
      if (ez.values[i] > opts.rank_tol * z_max) zkeep.push_back(i);
    }
    if (static_cast<int>(zkeep.size()) >= p) break;
    Eigen::MatrixXcd zf(p, static_cast<Eigen::Index>(zkeep.size()));
    for (size_t c = 0; c < zkeep.size(); ++c) {
      zf.col(static_cast<Eigen::Index>(c)) =
          ez.vectors.entries().col(zkeep[c]) * std::sqrt(ez.values[zkeep[c]]);
    }
    Eigen::MatrixXcd g_next = g * zf;
    const double tr = g_next.squaredNorm();
    if (!(tr > 0.0)) break;
    g_next /= std::sqrt(tr);
    if (field == Field::kReal) g_next = g_next.real().cast<Complex>();
    {
      HermMatrix refined = restore_constraints(assemble(g_next), basis, field);
      g_next = psd_factor(refined, opts.rank_tol);
      if (field == Field::kReal) g_next = g_next.real().cast<Complex>();
    }

    const HermMatrix x_next = assemble(g_next);
    const double min_eig = lambda_min(x_next);
    if (min_eig < -1e-7) {
      throw NumericalError("rank_reduce: PSD violation after reduction step",
                           -min_eig);
    }
    g = std::move(g_next);
    record(g);
  }

  out.factor = ComplexMatrix(Eigen::MatrixXcd(g));
  out.rank = static_cast<int>(g.cols());
  out.x = assemble(g);
  return out;
}

}  // namespace ssv
