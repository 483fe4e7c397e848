#pragma once

#include <stdexcept>
#include <vector>

#include "ssv/numerics.h"
#include "ssv/structure.h"

namespace ssv {

/// Positive scaling D = diag(d_j I_{n_j}), one d_j per full block, normalized
/// so the last full block has d = 1. Repeated-scalar blocks are left unscaled.
class Scaling {
 public:
  Scaling() = default;
  Scaling(BlockStructure structure, std::vector<double> d);

  static Scaling Identity(const BlockStructure& structure);
  /// d_j = exp(x_j) for the first F-1 full blocks, d_F = 1.
  static Scaling FromLog(const BlockStructure& structure,
                         const Eigen::VectorXd& log_d);

  const std::vector<double>& d() const { return d_; }
  const BlockStructure& structure() const { return structure_; }
  /// Per-row diagonal of D.
  Eigen::VectorXd expanded() const;

 private:
  BlockStructure structure_;
  std::vector<double> d_;
};

class UnsupportedStructure : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// D^{1/2} M D^{-1/2}.
ComplexMatrix apply_scaling(const ComplexMatrix& m, const Scaling& d);

struct NuOptions {
  double tol = 1e-8;
  int max_iterations = 5000;
  double cluster_tol = 1e-8;
  /// Search radius for log d_j.
  double log_radius = 15.0;
};

struct NuResult {
  double nu = 0.0;
  Scaling d_opt;
  int iterations = 0;
  /// Eigenvalue-test value at d_opt; zero at a true optimum.
  double gap_estimate = 0.0;
  bool converged = false;
  /// Objective values of accepted iterates, in order.
  std::vector<double> history;
};

/// Upper bound nu(M) = inf_D sigma_max(D^{1/2} M D^{-1/2}) for full-block
/// structures.
///
/// log sigma_max(e^{X/2} M e^{-X/2}) is convex in the log-scalings x, with
/// subgradient sigma1/2 (|u_j|^2 - |v_j|^2) from a top singular pair. A
/// central-cut ellipsoid run brings x close to the minimizer, then a Newton
/// iteration on the optimality system of the active top cluster polishes it
/// to machine precision. Throws UnsupportedStructure when the structure has a
/// repeated-scalar block.
NuResult nu_upper(const ComplexMatrix& m, const BlockStructure& structure,
                  const NuOptions& opts = {});

}  // namespace ssv
