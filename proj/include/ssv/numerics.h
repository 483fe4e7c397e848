#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ssv {

using Complex = std::complex<double>;

/// Scalar field a matrix space is taken over: real symmetric (S_r) or complex
/// Hermitian (H_r).
enum class Field { kReal, kComplex };

const char* to_string(Field field);

/// Raised when an iterative kernel fails to reach its accuracy target. Carries
/// the residual observed at the point of failure.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Dense complex matrix that remembers whether every entry is real.
///
/// Realness is detected on construction: `is_real()` is true exactly when all
/// imaginary parts are zero. Real-valued kernels are used for real matrices so
/// that outputs derived from them stay exactly real.
class ComplexMatrix {
 public:
  ComplexMatrix() = default;
  explicit ComplexMatrix(Eigen::MatrixXcd entries);
  explicit ComplexMatrix(const Eigen::MatrixXd& entries);

  static ComplexMatrix Identity(int n);
  static ComplexMatrix Zero(int rows, int cols);

  int rows() const { return static_cast<int>(entries_.rows()); }
  int cols() const { return static_cast<int>(entries_.cols()); }
  bool is_real() const { return is_real_; }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Complex operator()(int i, int j) const { return entries_(i, j); }

  /// Real part as a real matrix. Only meaningful as an exact copy when
  /// `is_real()` holds.
  Eigen::MatrixXd real() const { return entries_.real(); }

  ComplexMatrix adjoint() const;
  double max_abs_imag() const;

  friend bool operator==(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.entries_.rows() == b.entries_.rows() &&
           a.entries_.cols() == b.entries_.cols() && a.entries_ == b.entries_;
  }

 private:
  Eigen::MatrixXcd entries_;
  bool is_real_ = true;
};

/// Square Hermitian matrix. Exact symmetry is enforced on construction by
/// replacing X with (X + X*) / 2.
class HermMatrix {
 public:
  HermMatrix() = default;
  explicit HermMatrix(const Eigen::MatrixXcd& entries);
  explicit HermMatrix(const Eigen::MatrixXd& entries);

  static HermMatrix Identity(int dim);
  static HermMatrix Zero(int dim);

  int dim() const { return static_cast<int>(entries_.rows()); }
  bool is_real() const { return is_real_; }
  const Eigen::MatrixXcd& entries() const { return entries_; }
  Complex operator()(int i, int j) const { return entries_(i, j); }

  double trace() const { return entries_.trace().real(); }
  double norm() const { return entries_.norm(); }

  /// Entrywise real part; for Hermitian X this is the symmetric matrix
  /// Re X, which satisfies <P, Re X> = <P, X> for every real symmetric P.
  HermMatrix real_part() const;

  HermMatrix operator+(const HermMatrix& other) const;
  HermMatrix operator-(const HermMatrix& other) const;
  HermMatrix operator*(double s) const;

 private:
  Eigen::MatrixXcd entries_;
  bool is_real_ = true;
};

/// Trace inner product <X, Y> = trace(XY), real for Hermitian arguments.
double inner(const HermMatrix& x, const HermMatrix& y);

struct Svd {
  std::vector<double> values;  // descending
  ComplexMatrix left;
  ComplexMatrix right;
};

/// Thin SVD A = left * diag(values) * right^*. Real A yields real factors.
Svd svd(const ComplexMatrix& a);

struct Eigh {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;
};

/// Eigendecomposition H = Q diag(values) Q^* with Q unitary.
Eigh eigh(const HermMatrix& h);

double lambda_min(const HermMatrix& h);
double lambda_max(const HermMatrix& h);

/// Largest singular value.
double sigma_max(const ComplexMatrix& a);
/// Smallest singular value.
double sigma_min(const ComplexMatrix& a);

// Vectorization of S_r / H_r with the off-diagonal entries scaled by sqrt(2),
// so that the trace inner product equals the Euclidean dot product. Layout:
// diagonal entries first, then for each k < l the real part and (complex field
// only) the imaginary part of entry (k, l).

int herm_space_dim(int r, Field field);
Eigen::VectorXd vectorize(const HermMatrix& x, Field field);
HermMatrix unvectorize(const Eigen::VectorXd& v, int r, Field field);

struct NumericsOptions {
  /// Relative tolerance on the singular values of a stacked basis when
  /// deciding rank.
  double rank_tol = 1e-9;
};

/// Orthonormal basis (trace inner product) of span(members) inside S_r or H_r.
std::vector<HermMatrix> span_basis(std::span<const HermMatrix> members, int r,
                                   Field field,
                                   const NumericsOptions& opts = {});

/// Orthonormal basis of the orthogonal complement of span(basis) in S_r
/// (field = real) or H_r (field = complex). With an empty input the canonical
/// basis of the whole space is returned.
std::vector<HermMatrix> orthonormal_complement(
    std::span<const HermMatrix> basis, int r, Field field,
    const NumericsOptions& opts = {});

/// Nearest PSD matrix in Frobenius norm.
HermMatrix project_psd(const HermMatrix& x);

}  // namespace ssv
