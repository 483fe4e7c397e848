#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "ssv/certificates.h"

namespace ssv {

namespace {

struct Candidate {
  // Unit-norm blocks (rank-one for full blocks, unimodular scalar otherwise).
  std::vector<Eigen::MatrixXcd> blocks;
};

Eigen::MatrixXcd assemble_blocks(const std::vector<Eigen::MatrixXcd>& blocks, int n) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
  int at = 0;
  for (const Eigen::MatrixXcd& b : blocks) {
    out.block(at, at, b.rows(), b.cols()) = b;
    at += static_cast<int>(b.rows());
  }
  return out;
}

Eigen::VectorXcd unit_or_fallback(const Eigen::VectorXcd& x, std::mt19937_64& rng) {
  const double nrm = x.norm();
  if (nrm > 1e-14) return x / nrm;
  std::normal_distribution<double> g;
  Eigen::VectorXcd y(x.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = Complex(g(rng), g(rng));
  return y / y.norm();
}

Candidate random_candidate(const BlockStructure& s, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  Candidate c;
  for (int j = 0; j < s.num_blocks(); ++j) {
    const int nj = s.size(j);
    if (s.blocks()[j].kind == BlockKind::kRepeatedScalar) {
      c.blocks.push_back(std::polar(1.0, phase(rng)) *
                         Eigen::MatrixXcd::Identity(nj, nj));
      continue;
    }
    Eigen::VectorXcd a(nj), b(nj);
    for (int i = 0; i < nj; ++i) {
      a(i) = Complex(g(rng), g(rng));
      b(i) = Complex(g(rng), g(rng));
    }
    c.blocks.push_back((a / a.norm()) * (b / b.norm()).adjoint());
  }
  return c;
}

Candidate svd_candidate(const ComplexMatrix& m, const BlockStructure& s,
                        std::mt19937_64& rng) {
  const Svd sv = svd(m);
  const Eigen::VectorXcd u = sv.left.entries().col(0);
  const Eigen::VectorXcd v = sv.right.entries().col(0);
  Candidate c;
  for (int j = 0; j < s.num_blocks(); ++j) {
    const int off = s.offset(j);
    const int nj = s.size(j);
    const Eigen::VectorXcd uj = u.segment(off, nj);
    const Eigen::VectorXcd vj = v.segment(off, nj);
    if (s.blocks()[j].kind == BlockKind::kRepeatedScalar) {
      const Complex c0 = uj.dot(vj);
      const Complex delta = std::abs(c0) > 1e-14 ? c0 / std::abs(c0) : Complex(1.0);
      c.blocks.push_back(delta * Eigen::MatrixXcd::Identity(nj, nj));
      continue;
    }
    c.blocks.push_back(unit_or_fallback(vj, rng) * unit_or_fallback(uj, rng).adjoint());
  }
  return c;
}

struct Dominant {
  Complex lambda;
  Eigen::VectorXcd right;
  Eigen::VectorXcd left;  // left^* A = lambda left^*
};

Dominant dominant_pair(const Eigen::MatrixXcd& a) {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(a);
  Eigen::Index k = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&k);
  Dominant d;
  d.lambda = es.eigenvalues()(k);
  d.right = es.eigenvectors().col(k);
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> ls(a.adjoint());
  Eigen::Index kl = 0;
  (ls.eigenvalues().array() - std::conj(d.lambda)).abs().minCoeff(&kl);
  d.left = ls.eigenvectors().col(kl);
  return d;
}

// Power-type ascent on the spectral radius of M Delta over unit Delta.
void ascend(const Eigen::MatrixXcd& m, const BlockStructure& s, Candidate& c,
            int budget, std::mt19937_64& rng, double& best_rho,
            Candidate& best) {
  const int n = s.n();
  for (int it = 0; it < budget; ++it) {
    const Eigen::MatrixXcd delta = assemble_blocks(c.blocks, n);
    const Dominant dom = dominant_pair(m * delta);
    const double rho = std::abs(dom.lambda);
    if (rho > best_rho) {
      best_rho = rho;
      best = c;
    }
    if (rho <= 1e-300) break;
    const Complex qp = dom.left.dot(dom.right);
    if (std::abs(qp) <= 1e-14) break;
    const Eigen::RowVectorXcd zrow =
        (std::conj(dom.lambda) / rho) * (dom.left.adjoint() * m) / qp;
    const Eigen::VectorXcd z = zrow.adjoint();

    Candidate next;
    double change = 0.0;
    for (int j = 0; j < s.num_blocks(); ++j) {
      const int off = s.offset(j);
      const int nj = s.size(j);
      const Eigen::VectorXcd pj = dom.right.segment(off, nj);
      const Eigen::VectorXcd zj = z.segment(off, nj);
      Eigen::MatrixXcd blk;
      if (s.blocks()[j].kind == BlockKind::kRepeatedScalar) {
        const Complex cj = zrow.segment(off, nj) * pj;
        blk = std::abs(cj) > 1e-14
                  ? Eigen::MatrixXcd(std::conj(cj) / std::abs(cj) *
                                     Eigen::MatrixXcd::Identity(nj, nj))
                  : c.blocks[j];
      } else if (pj.norm() > 1e-14 && zj.norm() > 1e-14) {
        blk = (zj / zj.norm()) * (pj / pj.norm()).adjoint();
      } else {
        blk = c.blocks[j];
      }
      change = std::max(change, (blk - c.blocks[j]).cwiseAbs().maxCoeff());
      next.blocks.push_back(std::move(blk));
    }
    c = std::move(next);
    if (change <= 1e-13) break;
  }
  (void)rng;
}

}  // namespace

MuLowerResult mu_lower_search(const Problem& problem, int seeds, int budget,
                              std::uint64_t base_seed) {
  const BlockStructure& s = problem.structure;
  const Eigen::MatrixXcd& m = problem.matrix.entries();
  MuLowerResult out;
  if (seeds <= 0 || budget <= 0) return out;
  if (!(sigma_max(problem.matrix) > 0.0)) return out;

  double best_rho = 0.0;
  Candidate best;
  for (int k = 0; k < seeds; ++k) {
    std::mt19937_64 rng(base_seed + static_cast<std::uint64_t>(k));
    Candidate c = k == 0 ? svd_candidate(problem.matrix, s, rng)
                         : random_candidate(s, rng);
    ascend(m, s, c, budget, rng, best_rho, best);
  }
  if (!(best_rho > 0.0) || best.blocks.empty()) return out;

  const Eigen::MatrixXcd unit = assemble_blocks(best.blocks, s.n());
  const Dominant dom = dominant_pair(m * unit);
  Perturbation delta;
  int at = 0;
  for (const Eigen::MatrixXcd& b : best.blocks) {
    delta.blocks.emplace_back(Eigen::MatrixXcd(b / dom.lambda));
    at += static_cast<int>(b.rows());
  }
  delta.norm = sigma_max(delta.assemble());
  const auto [smin, dnorm] = verify_perturbation(problem.matrix, delta);
  if (smin > 1e-9 || !(dnorm > 0.0)) return out;
  out.value = 1.0 / dnorm;
  out.singularity_residual = smin;
  out.delta = std::move(delta);
  return out;
}

}  // namespace ssv
