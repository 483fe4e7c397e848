#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ssv/lowrank.h"
#include "ssv/numerics.h"
#include "ssv/scaling.h"
#include "ssv/structure.h"

namespace ssv {

/// The singular vectors belonging to the top singular value sigma1 and its
/// numerical multiplicity r: M = sigma1 U V^* + (rest).
struct TopSvd {
  double sigma1 = 0.0;
  int r = 0;
  ComplexMatrix u;  // n x r
  ComplexMatrix v;  // n x r
  std::vector<double> values;  // all singular values, descending
};

/// r counts the singular values within cluster_tol * sigma1 of sigma1. Real M
/// gives real U and V. Throws std::invalid_argument for the zero matrix.
TopSvd top_svd(const ComplexMatrix& m, double cluster_tol = 1e-8);

/// The finite family whose span decides optimal scaling and whose common
/// isotropic vector decides mu = sigma1.
///
/// Full block j contributes P_j = U_j^* U_j - V_j^* V_j, except the last full
/// block, whose member is the negated sum of the others. A repeated-scalar
/// block contributes U_j^* E U_j - V_j^* E V_j for E ranging over the
/// symmetric unit matrices E_kl (k <= l) and the Hermitian imaginary ones F_kl
/// (k < l) of size n_j x n_j.
struct PSet {
  std::vector<HermMatrix> members;
  /// Block index that generated each member.
  std::vector<int> owners;
  Field field = Field::kReal;
  int r = 0;
  BlockStructure structure;
};

PSet build_pset(const TopSvd& top, const BlockStructure& structure);

struct ScalingCheck {
  bool optimal = false;
  /// Value of the eigenvalue test; 0 when span(P) misses the PD cone.
  double lambda = 0.0;
  /// Set when lambda sits between the resolution of the test and the
  /// decision threshold.
  bool marginal = false;
};

/// Whether sigma_max(M) = nu(M), decided from the P-set of M: true iff
/// span(P) does not meet the positive definite cone of the P-set's field.
ScalingCheck check_scaling(const PSet& pset, const LowRankOptions& opts = {});
bool check_optimal_scaling(const PSet& pset, const LowRankOptions& opts = {});

struct EtaCertificate {
  /// Unit norm; first nonzero component real and positive.
  Eigen::VectorXcd eta;
  /// max over P of |eta^* P eta|.
  double max_residual = 0.0;
};

struct EtaSearch {
  std::optional<EtaCertificate> eta;
  FeasibilityStatus feasibility = FeasibilityStatus::kStalled;
  RankBound target;
  int rank = 0;
  bool bound_guaranteed = false;
  /// Dimension of span(P)^perp, and whether it is spanned by the identity.
  int complement_dim = 0;
  bool complement_is_identity = false;
};

/// Searches for a nonzero eta with eta^* P eta = 0 for every P in the set.
/// Real field: rank-two PSD certificate X = Re(eta eta^*). Complex field:
/// rank-one certificate X = eta eta^*.
EtaSearch find_eta_search(const PSet& pset, const LowRankOptions& opts = {});
std::optional<EtaCertificate> find_eta(const PSet& pset,
                                       const LowRankOptions& opts = {});

/// Structured perturbation, one matrix per block.
struct Perturbation {
  std::vector<ComplexMatrix> blocks;
  /// Largest singular value of the assembled block-diagonal matrix.
  double norm = 0.0;

  ComplexMatrix assemble() const;
  bool is_real() const;
};

class CertificateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Worst-case perturbation from eta: Delta_j = (V_j eta)(U_j eta)^* /
/// (sigma1 |U_j eta|^2), so that (I - M Delta) U eta = 0. Full blocks only.
/// Throws CertificateError if |U_j eta| and |V_j eta| disagree by more than
/// 1e-6 on some block.
Perturbation delta_from_eta(const EtaCertificate& eta, const TopSvd& top,
                            const BlockStructure& structure);

enum class Verdict { kEqual, kGap, kUndecided };

const char* to_string(Verdict verdict);

struct EqualityOptions {
  NuOptions nu;
  double cluster_tol = 1e-8;
  LowRankOptions lowrank;
  /// Tolerance of the singularity and norm checks on Delta.
  double certificate_tol = 1e-7;
};

struct EqualityReport {
  double nu = 0.0;
  double sigma_at_opt = 0.0;
  Verdict verdict = Verdict::kUndecided;
  Scaling d_opt;
  std::optional<EtaCertificate> eta;
  std::optional<Perturbation> delta;
  std::optional<double> mu_lower;

  // Diagnostics.
  int multiplicity = 0;
  Field field = Field::kReal;
  double scaling_lambda = 0.0;
  int rank = 0;
  int complement_dim = 0;
  bool gap_certified = false;
  double singularity_residual = 0.0;  // sigma_min(I - M Delta)
  double norm_product = 0.0;          // sigma_max(Delta) * nu
  std::string note;
};

/// Decides mu = nu: optimally scale, build the P-set of the scaled matrix,
/// search for eta and turn it into a worst-case Delta for M.
EqualityReport check_equality(const Problem& problem,
                              const EqualityOptions& opts = {});

/// Independent check of a perturbation against M using only the SVD:
/// returns {sigma_min(I - M Delta), sigma_max(Delta)}.
std::pair<double, double> verify_perturbation(const ComplexMatrix& m,
                                              const Perturbation& delta);

struct MuLowerResult {
  double value = 0.0;
  std::optional<Perturbation> delta;
  double singularity_residual = 0.0;
};

/// Randomized local search for structured Delta with I - M Delta singular;
/// returns the best 1 / sigma_max(Delta). A lower bound on mu, never claimed
/// tight. Deterministic for fixed (seeds, budget, base_seed).
MuLowerResult mu_lower_search(const Problem& problem, int seeds, int budget,
                              std::uint64_t base_seed = 0);

/// Whether a real unit eta with eta^T P eta = 0 for all P exists, decided on
/// the optimally scaled matrix by the real rank-one reduction. M must be real.
bool real_perturbation_exists(const Problem& problem,
                              const EqualityOptions& opts = {});

}  // namespace ssv
