#pragma once

#include <span>
#include <stop_token>
#include <vector>

#include "ssv/numerics.h"

namespace ssv {

struct LowRankOptions {
  // Dykstra stopping rule: successive change and constraint residual.
  double change_tol = 1e-11;
  double residual_tol = 1e-9;
  int max_iterations = 200000;
  // Eigenvalues below rank_tol * lambda_max count as zero.
  double rank_tol = 1e-9;
  // pd_intersection reports intersects when lambda exceeds this.
  double pd_threshold = 1e-6;
  // Target primal-dual gap for lambda in pd_intersection.
  double lambda_accuracy = 1e-8;
  int max_lambda_iterations = 100000;
  NumericsOptions numerics;
  // Checked once per iteration by the iterative solvers.
  std::stop_token stop;
};

struct PdIntersection {
  bool intersects = false;
  /// max over ||z|| <= 1 of lambda_min(sum_j z_j B_j).
  double lambda = 0.0;
  /// Coefficients attaining lambda, relative to `basis`.
  Eigen::VectorXd z;
  /// Orthonormal basis B of span(P_list).
  std::vector<HermMatrix> basis;
  /// Dual bound: min over trace-1 PSD X of the norm of the projection of X
  /// onto span(P_list) that was reached. lambda <= upper_bound.
  double upper_bound = 0.0;
  int iterations = 0;
};

/// Decides whether span(P_list) meets the positive definite cone of S_r
/// (field = real) or H_r (field = complex).
PdIntersection pd_intersection(std::span<const HermMatrix> p_list, int r,
                               Field field, const LowRankOptions& opts = {});

enum class FeasibilityStatus { kFound, kInfeasible, kStalled };

const char* to_string(FeasibilityStatus status);

struct FeasibilityResult {
  HermMatrix x;
  double residual = 0.0;
  FeasibilityStatus status = FeasibilityStatus::kStalled;
  int iterations = 0;
};

/// Finds a trace-one PSD X orthogonal to every member of P_list, by Dykstra's
/// alternating projections between the PSD cone and the affine set
/// {<P_j, X> = 0, trace X = 1}, started from I/r.
FeasibilityResult find_psd_orthogonal(std::span<const HermMatrix> p_list, int r,
                                      Field field,
                                      const LowRankOptions& opts = {});

/// Rank guaranteed by the Barvinok-type bound for a subspace of dimension
/// dim_l: the least q with (q+1)(q+2)/2 - 2 >= dim_l (real) or
/// (q+1)^2 - 2 >= dim_l (complex).
struct RankBound {
  int q = 1;
  Field field = Field::kReal;
  int dim_l = 0;
};

RankBound make_rank_bound(int dim_l, Field field);
/// Whether a subspace of dimension dim_l satisfies the bound for rank q.
bool rank_bound_holds(int q, int dim_l, Field field);

struct ReductionStep {
  int rank = 0;
  double max_residual = 0.0;
  double min_eigenvalue = 0.0;
  double trace = 0.0;
};

struct RankReduction {
  HermMatrix x;
  /// X = factor * factor^*, with rank columns.
  ComplexMatrix factor;
  int rank = 0;
  /// True when the dimension condition for target.q holds for span(P_list),
  /// in which case rank <= target.q is guaranteed.
  bool bound_guaranteed = false;
  /// Entry 0 describes the input; one entry per accepted step after that.
  std::vector<ReductionStep> steps;
};

/// Moves X along null directions of the compressed constraints until no
/// direction is left, dropping the rank by at least one per step.
RankReduction rank_reduce(const HermMatrix& x, std::span<const HermMatrix> p_list,
                          const RankBound& target,
                          const LowRankOptions& opts = {});

}  // namespace ssv
