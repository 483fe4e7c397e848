#include "ssv/numerics.h"

#include <algorithm>
#include <cmath>

namespace ssv {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;

bool all_imag_zero(const Eigen::MatrixXcd& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j).imag() != 0.0) return false;
    }
  }
  return true;
}

// Reconstruction check shared by svd and eigh.
void require_reconstruction(double residual, double scale, const char* what) {
  if (!(residual <= 1e-10 * std::max(scale, 1e-300) || residual == 0.0)) {
    throw NumericalError(std::string(what) + ": reconstruction residual too large",
                         residual);
  }
}

}  // namespace

const char* to_string(Field field) {
  return field == Field::kReal ? "real" : "complex";
}

ComplexMatrix::ComplexMatrix(Eigen::MatrixXcd entries)
    : entries_(std::move(entries)), is_real_(all_imag_zero(entries_)) {}

ComplexMatrix::ComplexMatrix(const Eigen::MatrixXd& entries)
    : entries_(entries.cast<Complex>()), is_real_(true) {}

ComplexMatrix ComplexMatrix::Identity(int n) {
  return ComplexMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n)));
}

ComplexMatrix ComplexMatrix::Zero(int rows, int cols) {
  return ComplexMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(rows, cols)));
}

ComplexMatrix ComplexMatrix::adjoint() const {
  return ComplexMatrix(Eigen::MatrixXcd(entries_.adjoint()));
}

double ComplexMatrix::max_abs_imag() const {
  if (entries_.size() == 0) return 0.0;
  return entries_.imag().cwiseAbs().maxCoeff();
}

HermMatrix::HermMatrix(const Eigen::MatrixXcd& entries) {
  if (entries.rows() != entries.cols()) {
    throw std::invalid_argument("HermMatrix: matrix must be square");
  }
  entries_ = 0.5 * (entries + entries.adjoint());
  // The diagonal of (X + X*)/2 is real up to the rounding of x + conj(x).
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    entries_(i, i) = Complex(entries_(i, i).real(), 0.0);
  }
  is_real_ = all_imag_zero(entries_);
}

HermMatrix::HermMatrix(const Eigen::MatrixXd& entries)
    : HermMatrix(Eigen::MatrixXcd(entries.cast<Complex>())) {}

HermMatrix HermMatrix::Identity(int dim) {
  return HermMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Identity(dim, dim)));
}

HermMatrix HermMatrix::Zero(int dim) {
  return HermMatrix(Eigen::MatrixXd(Eigen::MatrixXd::Zero(dim, dim)));
}

HermMatrix HermMatrix::real_part() const {
  return HermMatrix(Eigen::MatrixXd(entries_.real()));
}

HermMatrix HermMatrix::operator+(const HermMatrix& other) const {
  return HermMatrix(Eigen::MatrixXcd(entries_ + other.entries_));
}

HermMatrix HermMatrix::operator-(const HermMatrix& other) const {
  return HermMatrix(Eigen::MatrixXcd(entries_ - other.entries_));
}

HermMatrix HermMatrix::operator*(double s) const {
  return HermMatrix(Eigen::MatrixXcd(entries_ * s));
}

double inner(const HermMatrix& x, const HermMatrix& y) {
  // trace(XY) = sum_ij X_ij Y_ji = sum_ij X_ij conj(Y_ij) for Hermitian Y.
  return (x.entries().array() * y.entries().conjugate().array()).sum().real();
}

Svd svd(const ComplexMatrix& a) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw std::invalid_argument("svd: empty matrix");
  }
  Svd out;
  double residual = 0.0;
  double scale = 0.0;
  if (a.is_real()) {
    const Eigen::MatrixXd ar = a.real();
    Eigen::JacobiSVD<Eigen::MatrixXd> solver(
        ar, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = solver.singularValues();
    out.values.assign(s.data(), s.data() + s.size());
    out.left = ComplexMatrix(Eigen::MatrixXd(solver.matrixU()));
    out.right = ComplexMatrix(Eigen::MatrixXd(solver.matrixV()));
    residual = (ar - solver.matrixU() * s.asDiagonal() *
                         solver.matrixV().transpose())
                   .norm();
    scale = ar.norm();
  } else {
    Eigen::JacobiSVD<Eigen::MatrixXcd> solver(
        a.entries(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd s = solver.singularValues();
    out.values.assign(s.data(), s.data() + s.size());
    out.left = ComplexMatrix(Eigen::MatrixXcd(solver.matrixU()));
    out.right = ComplexMatrix(Eigen::MatrixXcd(solver.matrixV()));
    residual = (a.entries() - solver.matrixU() * s.cast<Complex>().asDiagonal() *
                                  solver.matrixV().adjoint())
                   .norm();
    scale = a.entries().norm();
  }
  require_reconstruction(residual, scale, "svd");
  return out;
}

Eigh eigh(const HermMatrix& h) {
  const int n = h.dim();
  if (n == 0) return {};
  Eigh out;
  out.values.resize(n);
  if (h.is_real()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.entries().real());
    if (solver.info() != Eigen::Success) {
      throw NumericalError("eigh: no convergence", h.norm());
    }
    // Eigen sorts ascending; reverse to descending.
    Eigen::MatrixXd q(n, n);
    for (int i = 0; i < n; ++i) {
      out.values[i] = solver.eigenvalues()(n - 1 - i);
      q.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    out.vectors = ComplexMatrix(q);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.entries());
    if (solver.info() != Eigen::Success) {
      throw NumericalError("eigh: no convergence", h.norm());
    }
    Eigen::MatrixXcd q(n, n);
    for (int i = 0; i < n; ++i) {
      out.values[i] = solver.eigenvalues()(n - 1 - i);
      q.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    out.vectors = ComplexMatrix(std::move(q));
  }
  return out;
}

double lambda_min(const HermMatrix& h) { return eigh(h).values.back(); }

double lambda_max(const HermMatrix& h) { return eigh(h).values.front(); }

double sigma_max(const ComplexMatrix& a) { return svd(a).values.front(); }

double sigma_min(const ComplexMatrix& a) {
  const Svd s = svd(a);
  if (a.rows() != a.cols()) {
    throw std::invalid_argument("sigma_min: matrix must be square");
  }
  return s.values.back();
}

int herm_space_dim(int r, Field field) {
  return field == Field::kReal ? r * (r + 1) / 2 : r * r;
}

Eigen::VectorXd vectorize(const HermMatrix& x, Field field) {
  const int r = x.dim();
  Eigen::VectorXd v(herm_space_dim(r, field));
  int pos = 0;
  for (int k = 0; k < r; ++k) v(pos++) = x(k, k).real();
  for (int k = 0; k < r; ++k) {
    for (int l = k + 1; l < r; ++l) {
      v(pos++) = kSqrt2 * x(k, l).real();
      if (field == Field::kComplex) v(pos++) = kSqrt2 * x(k, l).imag();
    }
  }
  return v;
}

HermMatrix unvectorize(const Eigen::VectorXd& v, int r, Field field) {
  if (v.size() != herm_space_dim(r, field)) {
    throw std::invalid_argument("unvectorize: length does not match dimension");
  }
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(r, r);
  int pos = 0;
  for (int k = 0; k < r; ++k) m(k, k) = v(pos++);
  for (int k = 0; k < r; ++k) {
    for (int l = k + 1; l < r; ++l) {
      const double re = v(pos++) / kSqrt2;
      const double im = field == Field::kComplex ? v(pos++) / kSqrt2 : 0.0;
      m(k, l) = Complex(re, im);
      m(l, k) = Complex(re, -im);
    }
  }
  return HermMatrix(m);
}

namespace {

void check_members(std::span<const HermMatrix> members, int r, Field field,
                   const char* what) {
  for (const HermMatrix& m : members) {
    if (m.dim() != r) {
      throw std::invalid_argument(std::string(what) + ": dimension mismatch");
    }
    if (field == Field::kReal && !m.is_real()) {
      throw std::invalid_argument(std::string(what) +
                                  ": real field requires real members");
    }
  }
}

// Left singular vectors of the stacked member matrix, and its numerical rank.
std::pair<Eigen::MatrixXd, int> stacked_svd(std::span<const HermMatrix> members,
                                            int r, Field field,
                                            const NumericsOptions& opts) {
  const int d = herm_space_dim(r, field);
  const int k = static_cast<int>(members.size());
  Eigen::MatrixXd a(d, std::max(k, 1));
  a.setZero();
  for (int j = 0; j < k; ++j) a.col(j) = vectorize(members[j], field);
  Eigen::JacobiSVD<Eigen::MatrixXd> solver(a, Eigen::ComputeFullU);
  const Eigen::VectorXd s = solver.singularValues();
  const double cut = opts.rank_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut) ++rank;
  }
  if (k == 0) rank = 0;
  return {solver.matrixU(), rank};
}

}  // namespace

std::vector<HermMatrix> span_basis(std::span<const HermMatrix> members, int r,
                                   Field field, const NumericsOptions& opts) {
  check_members(members, r, field, "span_basis");
  if (members.empty()) return {};
  const auto [u, rank] = stacked_svd(members, r, field, opts);
  std::vector<HermMatrix> out;
  out.reserve(rank);
  for (int i = 0; i < rank; ++i) {
    out.push_back(unvectorize(u.col(i), r, field));
  }
  return out;
}

std::vector<HermMatrix> orthonormal_complement(std::span<const HermMatrix> basis,
                                               int r, Field field,
                                               const NumericsOptions& opts) {
  check_members(basis, r, field, "orthonormal_complement");
  const int d = herm_space_dim(r, field);
  std::vector<HermMatrix> out;
  if (basis.empty()) {
    for (int i = 0; i < d; ++i) {
      out.push_back(unvectorize(Eigen::VectorXd::Unit(d, i), r, field));
    }
    return out;
  }
  const auto [u, rank] = stacked_svd(basis, r, field, opts);
  for (int i = rank; i < d; ++i) {
    Eigen::VectorXd v = u.col(i);
    // Deterministic sign: largest-magnitude coordinate positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0) v = -v;
    out.push_back(unvectorize(v, r, field));
  }
  return out;
}

HermMatrix project_psd(const HermMatrix& x) {
  const int n = x.dim();
  if (n == 0) return x;
  const Eigh e = eigh(x);
  if (e.values.back() >= 0.0) return x;
  Eigen::VectorXd clipped(n);
  for (int i = 0; i < n; ++i) clipped(i) = std::max(e.values[i], 0.0);
  const Eigen::MatrixXcd& q = e.vectors.entries();
  const Eigen::MatrixXcd out =
      q * clipped.cast<Complex>().asDiagonal() * q.adjoint();
  if (x.is_real()) return HermMatrix(Eigen::MatrixXd(out.real()));
  return HermMatrix(out);
}

}  // namespace ssv
