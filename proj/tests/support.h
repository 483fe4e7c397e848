#pragma once

#include <random>
#include <vector>

#include "ssv/certificates.h"
#include "ssv/paper_suite.h"

namespace ssv::testing {

inline HermMatrix random_herm(int r, Field field, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(r, r);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) {
      a(i, j) = Complex(g(rng), field == Field::kComplex ? g(rng) : 0.0);
    }
  }
  return HermMatrix(a);
}

inline HermMatrix random_density(int r, Field field, std::mt19937_64& rng) {
  const Eigen::MatrixXcd b = random_herm(r, field, rng).entries();
  const HermMatrix x(Eigen::MatrixXcd(b * b.adjoint()));
  return x * (1.0 / x.trace());
}

inline ComplexMatrix random_rect(int rows, int cols, Field field, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd a(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      a(i, j) = Complex(g(rng), field == Field::kComplex ? g(rng) : 0.0);
    }
  }
  return ComplexMatrix(std::move(a));
}

// Subspace of dimension dim_l orthogonal to a random full-rank density, so the
// PSD feasibility problem always has a solution.
inline std::vector<HermMatrix> feasible_members(int r, int dim_l, Field field,
                                                std::mt19937_64& rng) {
  const HermMatrix x0 = random_density(r, field, rng);
  std::vector<HermMatrix> out;
  for (int i = 0; i < dim_l; ++i) {
    const HermMatrix p = random_herm(r, field, rng);
    out.push_back(p - x0 * (inner(p, x0) / inner(x0, x0)));
  }
  return out;
}

inline Eigen::MatrixXcd from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto m = static_cast<Eigen::Index>(rows.begin()->size());
  Eigen::MatrixXcd out(n, m);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (const Complex& v : row) out(i, j++) = v;
    ++i;
  }
  return out;
}

// TopSvd assembled from given orthonormal factors, as printed for the
// counterexamples (the computed SVD may mix the columns).
inline TopSvd factor_svd(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v) {
  TopSvd t;
  t.sigma1 = 1.0;
  t.r = static_cast<int>(u.cols());
  t.u = ComplexMatrix(u);
  t.v = ComplexMatrix(v);
  return t;
}

inline double frob(const Eigen::MatrixXcd& a) { return a.norm(); }

}  // namespace ssv::testing
