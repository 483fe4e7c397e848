#include "ssv/certificates.h"

#include <algorithm>
#include <cmath>

namespace ssv {

namespace {

constexpr double kDropTol = 1e-12;

HermMatrix conjugated_difference(const Eigen::MatrixXcd& uj,
                                 const Eigen::MatrixXcd& vj,
                                 const Eigen::MatrixXcd& e) {
  return HermMatrix(
      Eigen::MatrixXcd(uj.adjoint() * e * uj - vj.adjoint() * e * vj));
}

double eta_residual(const Eigen::VectorXcd& eta,
                    const std::vector<HermMatrix>& members) {
  double worst = 0.0;
  for (const HermMatrix& p : members) {
    worst = std::max(worst, std::abs((eta.adjoint() * p.entries() * eta)(0, 0)));
  }
  return worst;
}

void normalize_eta(Eigen::VectorXcd& eta) {
  eta /= eta.norm();
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double a = std::abs(eta(i));
    if (a > 1e-9) {
      eta *= std::conj(eta(i)) / a;
      eta(i) = Complex(eta(i).real(), 0.0);
      break;
    }
  }
}

// Minimum-norm Newton steps on the quadratic system eta^* P_j eta = 0. Keeps
// real eta real when every P_j is real.
Eigen::VectorXcd refine_eta(Eigen::VectorXcd eta,
                            const std::vector<HermMatrix>& members) {
  if (members.empty()) return eta;
  const auto r = eta.size();
  const auto k = static_cast<Eigen::Index>(members.size());
  double res = eta_residual(eta, members);
  for (int it = 0; it < 30 && res > 1e-15; ++it) {
    Eigen::MatrixXd jac(k, 2 * r);
    Eigen::VectorXd f(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::VectorXcd pe = members[j].entries() * eta;
      f(j) = eta.dot(pe).real();
      jac.block(j, 0, 1, r) = 2.0 * pe.real().transpose();
      jac.block(j, r, 1, r) = 2.0 * pe.imag().transpose();
    }
    const Eigen::VectorXd step =
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd>(jac).solve(-f);
    Eigen::VectorXcd next(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      next(i) = eta(i) + Complex(step(i), step(r + i));
    }
    next /= next.norm();
    const double next_res = eta_residual(next, members);
    if (!(next_res < res)) break;
    eta = next;
    res = next_res;
  }
  return eta;
}

}  // namespace

TopSvd top_svd(const ComplexMatrix& m, double cluster_tol) {
  const Svd s = svd(m);
  TopSvd out;
  out.values = s.values;
  out.sigma1 = s.values.front();
  if (!(out.sigma1 > 0.0)) {
    throw std::invalid_argument("top_svd: matrix is zero");
  }
  out.r = 0;
  for (double v : s.values) {
    if (v >= out.sigma1 * (1.0 - cluster_tol)) ++out.r;
  }
  out.u = ComplexMatrix(Eigen::MatrixXcd(s.left.entries().leftCols(out.r)));
  out.v = ComplexMatrix(Eigen::MatrixXcd(s.right.entries().leftCols(out.r)));
  return out;
}

PSet build_pset(const TopSvd& top, const BlockStructure& structure) {
  if (top.u.rows() != structure.n() || top.v.rows() != structure.n()) {
    throw std::invalid_argument("build_pset: singular vectors do not match structure");
  }
  PSet out;
  out.r = top.r;
  out.structure = structure;
  const std::vector<ComplexMatrix> ur = block_rows(structure, top.u);
  const std::vector<ComplexMatrix> vr = block_rows(structure, top.v);
  const bool real_input = top.u.is_real() && top.v.is_real();
  bool has_imaginary = !real_input;

  const int s = structure.num_scalar();
  const int last_full = structure.num_blocks() - 1;
  for (int j = 0; j < structure.num_blocks(); ++j) {
    const Eigen::MatrixXcd& uj = ur[j].entries();
    const Eigen::MatrixXcd& vj = vr[j].entries();
    if (j >= s) {
      if (j == last_full) continue;
      out.members.push_back(conjugated_difference(
          uj, vj, Eigen::MatrixXcd::Identity(uj.rows(), uj.rows())));
      out.owners.push_back(j);
      continue;
    }
    const int nj = structure.size(j);
    for (int k = 0; k < nj; ++k) {
      for (int l = k; l < nj; ++l) {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(nj, nj);
        e(k, l) = 1.0;
        e(l, k) = 1.0;
        out.members.push_back(conjugated_difference(uj, vj, e));
        out.owners.push_back(j);
      }
    }
    for (int k = 0; k < nj; ++k) {
      for (int l = k + 1; l < nj; ++l) {
        Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(nj, nj);
        e(k, l) = Complex(0.0, 1.0);
        e(l, k) = Complex(0.0, -1.0);
        HermMatrix member = conjugated_difference(uj, vj, e);
        // For real U, V these members are purely imaginary; keep them (and
        // move to the Hermitian field) unless they vanish.
        if (real_input && member.norm() <= kDropTol) continue;
        if (!member.is_real()) has_imaginary = true;
        out.members.push_back(std::move(member));
        out.owners.push_back(j);
      }
    }
  }
  out.field = has_imaginary ? Field::kComplex : Field::kReal;
  if (out.field == Field::kReal) {
    for (HermMatrix& p : out.members) p = p.real_part();
  }
  return out;
}

ScalingCheck check_scaling(const PSet& pset, const LowRankOptions& opts) {
  const PdIntersection pd = pd_intersection(pset.members, pset.r, pset.field, opts);
  ScalingCheck out;
  out.lambda = pd.lambda;
  out.optimal = !pd.intersects;
  out.marginal = pd.lambda > 0.1 * opts.pd_threshold && pd.lambda <= opts.pd_threshold;
  return out;
}

bool check_optimal_scaling(const PSet& pset, const LowRankOptions& opts) {
  return check_scaling(pset, opts).optimal;
}

EtaSearch find_eta_search(const PSet& pset, const LowRankOptions& opts) {
  EtaSearch out;
  const int r = pset.r;
  const std::vector<HermMatrix> complement =
      orthonormal_complement(pset.members, r, pset.field, opts.numerics);
  out.complement_dim = static_cast<int>(complement.size());
  if (complement.size() == 1) {
    const double cosine =
        std::abs(inner(complement.front(), HermMatrix::Identity(r))) /
        (complement.front().norm() * std::sqrt(static_cast<double>(r)));
    out.complement_is_identity = cosine >= 1.0 - 1e-8;
  }
  const int dim_l =
      static_cast<int>(span_basis(pset.members, r, pset.field, opts.numerics).size());
  out.target = RankBound{pset.field == Field::kReal ? 2 : 1, pset.field, dim_l};

  const FeasibilityResult feas = find_psd_orthogonal(pset.members, r, pset.field, opts);
  out.feasibility = feas.status;
  if (feas.status != FeasibilityStatus::kFound) return out;

  const RankReduction red = rank_reduce(feas.x, pset.members, out.target, opts);
  out.rank = red.rank;
  out.bound_guaranteed = red.bound_guaranteed;
  if (red.rank > out.target.q || red.rank == 0) return out;

  const Eigen::MatrixXcd& g = red.factor.entries();
  Eigen::VectorXcd eta = g.col(0);
  if (red.rank == 2) eta += Complex(0.0, 1.0) * g.col(1);
  normalize_eta(eta);
  eta = refine_eta(eta, pset.members);
  normalize_eta(eta);
  const double res = eta_residual(eta, pset.members);
  if (res > 1e-7) return out;
  out.eta = EtaCertificate{eta, res};
  return out;
}

std::optional<EtaCertificate> find_eta(const PSet& pset, const LowRankOptions& opts) {
  return find_eta_search(pset, opts).eta;
}

ComplexMatrix Perturbation::assemble() const {
  int n = 0;
  for (const ComplexMatrix& b : blocks) n += b.rows();
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  int at = 0;
  for (const ComplexMatrix& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b.entries();
    at += b.rows();
  }
  return ComplexMatrix(std::move(out));
}

bool Perturbation::is_real() const {
  return std::all_of(blocks.begin(), blocks.end(),
                     [](const ComplexMatrix& b) { return b.is_real(); });
}

Perturbation delta_from_eta(const EtaCertificate& eta, const TopSvd& top,
                            const BlockStructure& structure) {
  if (!structure.full_only()) {
    throw std::invalid_argument(
        "delta_from_eta: only full-block structures are supported");
  }
  if (eta.eta.size() != top.r) {
    throw std::invalid_argument("delta_from_eta: eta has the wrong length");
  }
  const Eigen::VectorXcd ue = top.u.entries() * eta.eta;
  const Eigen::VectorXcd ve = top.v.entries() * eta.eta;
  Perturbation out;
  for (int j = 0; j < structure.num_blocks(); ++j) {
    const int off = structure.offset(j);
    const int nj = structure.size(j);
    const Eigen::VectorXcd uj = ue.segment(off, nj);
    const Eigen::VectorXcd vj = ve.segment(off, nj);
    const double nu = uj.norm();
    const double nv = vj.norm();
    if (nu <= 1e-9 && nv <= 1e-9) {
      out.blocks.push_back(ComplexMatrix::Zero(nj, nj));
      continue;
    }
    if (std::abs(nu - nv) > 1e-6) {
      throw CertificateError("delta_from_eta: |U_j eta| != |V_j eta| on block " +
                             std::to_string(j));
    }
    out.blocks.emplace_back(
        Eigen::MatrixXcd(vj * uj.adjoint() / (top.sigma1 * nu * nu)));
  }
  out.norm = sigma_max(out.assemble());
  return out;
}

const char* to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::kEqual:
      return "equal";
    case Verdict::kGap:
      return "gap";
    case Verdict::kUndecided:
      return "undecided";
  }
  return "?";
}

std::pair<double, double> verify_perturbation(const ComplexMatrix& m,
                                              const Perturbation& delta) {
  const ComplexMatrix d = delta.assemble();
  if (d.rows() != m.rows()) {
    throw std::invalid_argument("verify_perturbation: dimension mismatch");
  }
  const Eigen::MatrixXcd i_md =
      Eigen::MatrixXcd::Identity(m.rows(), m.cols()) - m.entries() * d.entries();
  return {sigma_min(ComplexMatrix(i_md)), sigma_max(d)};
}

EqualityReport check_equality(const Problem& problem, const EqualityOptions& opts) {
  EqualityReport rep;
  const BlockStructure& structure = problem.structure;
  const ComplexMatrix& m = problem.matrix;

  ComplexMatrix w = m;
  if (structure.full_only()) {
    NuOptions nu_opts = opts.nu;
    nu_opts.cluster_tol = opts.cluster_tol;
    const NuResult nu = nu_upper(m, structure, nu_opts);
    rep.nu = nu.nu;
    rep.d_opt = nu.d_opt;
    w = apply_scaling(m, nu.d_opt);
  } else {
    // Only D = I is examined for repeated-scalar structures.
    rep.d_opt = Scaling::Identity(structure);
    rep.nu = sigma_max(m);
  }

  if (!(sigma_max(w) > 0.0)) {
    rep.verdict = Verdict::kEqual;
    rep.sigma_at_opt = 0.0;
    rep.mu_lower = 0.0;
    rep.note = "zero matrix: mu = nu = 0";
    return rep;
  }

  const TopSvd top = top_svd(w, opts.cluster_tol);
  rep.sigma_at_opt = top.sigma1;
  rep.multiplicity = top.r;
  const PSet pset = build_pset(top, structure);
  rep.field = pset.field;

  const ScalingCheck check = check_scaling(pset, opts.lowrank);
  rep.scaling_lambda = check.lambda;
  if (!check.optimal) {
    rep.note = structure.full_only()
                   ? "scaling optimizer did not reach an optimal D"
                   : "D = I is not optimal; nu over repeated-scalar scalings is "
                     "not computed";
    return rep;
  }
  if (check.marginal) {
    rep.note = "optimality test is marginal at the computed scaling";
    return rep;
  }

  const EtaSearch search = find_eta_search(pset, opts.lowrank);
  rep.rank = search.rank;
  rep.complement_dim = search.complement_dim;
  if (search.feasibility != FeasibilityStatus::kFound) {
    rep.note = std::string("PSD feasibility search ") + to_string(search.feasibility);
    return rep;
  }
  if (!search.eta) {
    rep.verdict = Verdict::kGap;
    rep.gap_certified = search.complement_is_identity && top.r > search.target.q;
    rep.note = rep.gap_certified
                   ? "span(P)^perp = span(I): no eta exists"
                   : "rank reduction stopped above the target rank";
    return rep;
  }
  rep.eta = search.eta;
  if (!structure.full_only()) {
    rep.note = "eta found; Delta for repeated-scalar blocks is not constructed";
    return rep;
  }

  Perturbation delta;
  try {
    delta = delta_from_eta(*search.eta, top, structure);
  } catch (const CertificateError& e) {
    rep.note = e.what();
    return rep;
  }
  const auto [smin, dnorm] = verify_perturbation(m, delta);
  rep.singularity_residual = smin;
  rep.norm_product = dnorm * rep.nu;
  rep.delta = delta;
  if (smin <= opts.certificate_tol &&
      std::abs(rep.norm_product - 1.0) <= opts.certificate_tol) {
    rep.verdict = Verdict::kEqual;
    rep.mu_lower = 1.0 / dnorm;
  } else {
    rep.note = "perturbation failed verification";
  }
  return rep;
}

bool real_perturbation_exists(const Problem& problem, const EqualityOptions& opts) {
  const ComplexMatrix& m = problem.matrix;
  const BlockStructure& structure = problem.structure;
  if (!m.is_real()) {
    throw std::invalid_argument("real_perturbation_exists: M must be real");
  }
  auto pset_of = [&](const ComplexMatrix& w) {
    return build_pset(top_svd(w, opts.cluster_tol), structure);
  };
  PSet pset = pset_of(m);
  if (!check_optimal_scaling(pset, opts.lowrank)) {
    if (!structure.full_only()) {
      throw std::invalid_argument(
          "real_perturbation_exists: M is not optimally scaled");
    }
    NuOptions nu_opts = opts.nu;
    nu_opts.cluster_tol = opts.cluster_tol;
    const NuResult nu = nu_upper(m, structure, nu_opts);
    pset = pset_of(apply_scaling(m, nu.d_opt));
    if (!check_optimal_scaling(pset, opts.lowrank)) {
      throw NumericalError("real_perturbation_exists: scaling did not converge",
                           nu.gap_estimate);
    }
  }
  // eta^T P eta = eta^T Re(P) eta for real eta.
  std::vector<HermMatrix> real_members;
  for (const HermMatrix& p : pset.members) real_members.push_back(p.real_part());
  const FeasibilityResult feas =
      find_psd_orthogonal(real_members, pset.r, Field::kReal, opts.lowrank);
  if (feas.status == FeasibilityStatus::kInfeasible) return false;
  if (feas.status == FeasibilityStatus::kStalled) {
    throw NumericalError("real_perturbation_exists: feasibility search stalled",
                         feas.residual);
  }
  const int dim_l = static_cast<int>(
      span_basis(real_members, pset.r, Field::kReal, opts.lowrank.numerics).size());
  const RankReduction red = rank_reduce(feas.x, real_members,
                                        RankBound{1, Field::kReal, dim_l},
                                        opts.lowrank);
  return red.rank <= 1;
}

}  // namespace ssv
