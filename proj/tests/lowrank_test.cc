#include <cmath>

#include <gtest/gtest.h>

#include "support.h"

namespace ssv {
namespace {

std::vector<HermMatrix> ce1_members() {
  const Problem p = load_fixture("ce1-real-F6");
  return build_pset(top_svd(p.matrix), p.structure).members;
}

HermMatrix diag_pm() {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = -1.0;
  return HermMatrix(d);
}

TEST(PdIntersection, CounterexampleOneIsDisjoint) {
  const PdIntersection pd = pd_intersection(ce1_members(), 3, Field::kReal);
  EXPECT_FALSE(pd.intersects);
  EXPECT_LE(pd.lambda, 1e-8);
}

TEST(PdIntersection, IdentityIntersects) {
  // The unit basis element of span{I_r} is I_r / sqrt(r).
  for (int r = 1; r <= 4; ++r) {
    const std::vector<HermMatrix> p = {HermMatrix::Identity(r)};
    const PdIntersection pd = pd_intersection(p, r, Field::kReal);
    EXPECT_TRUE(pd.intersects);
    EXPECT_NEAR(pd.lambda, 1.0 / std::sqrt(static_cast<double>(r)), 1e-8);
  }
}

TEST(PdIntersection, IndefiniteDiagonal) {
  const std::vector<HermMatrix> p = {diag_pm()};
  const PdIntersection pd = pd_intersection(p, 2, Field::kReal);
  EXPECT_FALSE(pd.intersects);
  EXPECT_NEAR(pd.lambda, 0.0, 1e-8);
}

TEST(PdIntersection, EmptyListNeverIntersects) {
  const PdIntersection pd = pd_intersection({}, 3, Field::kComplex);
  EXPECT_FALSE(pd.intersects);
  EXPECT_EQ(pd.lambda, 0.0);
}

TEST(PdIntersection, LambdaIsWithinDualBound) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Field field = trial % 2 ? Field::kComplex : Field::kReal;
    const int r = 2 + trial % 3;
    std::vector<HermMatrix> p;
    for (int i = 0; i < 1 + trial % 4; ++i) p.push_back(testing::random_herm(r, field, rng));
    const PdIntersection pd = pd_intersection(p, r, field);
    EXPECT_LE(pd.lambda, pd.upper_bound + 1e-12);
    EXPECT_LE(pd.upper_bound - pd.lambda, 1e-8 + 1e-12);
    // lambda is attained by the reported direction.
    HermMatrix comb = HermMatrix::Zero(r);
    for (Eigen::Index j = 0; j < pd.z.size(); ++j) comb = comb + pd.basis[j] * pd.z(j);
    if (pd.lambda > 0.0) EXPECT_NEAR(lambda_min(comb), pd.lambda, 1e-12);
  }
}

TEST(FindPsdOrthogonal, CounterexampleOneIsUniqueIdentity) {
  const FeasibilityResult f = find_psd_orthogonal(ce1_members(), 3, Field::kReal);
  ASSERT_EQ(f.status, FeasibilityStatus::kFound);
  EXPECT_LE((f.x - HermMatrix::Identity(3) * (1.0 / 3.0)).norm(), 1e-9);
}

TEST(FindPsdOrthogonal, EmptyListReturnsStart) {
  const FeasibilityResult f = find_psd_orthogonal({}, 2, Field::kReal);
  ASSERT_EQ(f.status, FeasibilityStatus::kFound);
  EXPECT_LE((f.x - HermMatrix::Identity(2) * 0.5).norm(), 1e-15);
}

TEST(FindPsdOrthogonal, IdentityIsInfeasible) {
  const std::vector<HermMatrix> p = {HermMatrix::Identity(3)};
  EXPECT_EQ(find_psd_orthogonal(p, 3, Field::kComplex).status,
            FeasibilityStatus::kInfeasible);
}

TEST(FindPsdOrthogonal, FoundSatisfiesInvariants) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 60; ++trial) {
    const Field field = trial % 2 ? Field::kComplex : Field::kReal;
    const int r = 2 + trial % 4;
    const int k = 1 + static_cast<int>(rng() % (herm_space_dim(r, field) - 1));
    const auto p = testing::feasible_members(r, k, field, rng);
    const FeasibilityResult f = find_psd_orthogonal(p, r, field);
    if (f.status != FeasibilityStatus::kFound) continue;
    EXPECT_GE(lambda_min(f.x), -1e-9);
    EXPECT_NEAR(f.x.trace(), 1.0, 1e-9);
    for (const HermMatrix& m : p) EXPECT_LE(std::abs(inner(m, f.x)), 1e-9);
    EXPECT_EQ(f.x.is_real(), field == Field::kReal);
  }
}

TEST(FindPsdOrthogonal, StopTokenEndsSearch) {
  std::stop_source source;
  source.request_stop();
  LowRankOptions opts;
  opts.stop = source.get_token();
  std::mt19937_64 rng(33);
  const auto p = testing::feasible_members(4, 6, Field::kReal, rng);
  const FeasibilityResult f = find_psd_orthogonal(p, 4, Field::kReal, opts);
  EXPECT_LE(f.iterations, 1);
}

TEST(RankBoundFormula, SmallValues) {
  EXPECT_EQ(make_rank_bound(0, Field::kReal).q, 1);
  EXPECT_EQ(make_rank_bound(1, Field::kReal).q, 1);
  EXPECT_EQ(make_rank_bound(4, Field::kReal).q, 2);
  EXPECT_EQ(make_rank_bound(5, Field::kReal).q, 3);
  EXPECT_EQ(make_rank_bound(2, Field::kComplex).q, 1);
  EXPECT_EQ(make_rank_bound(3, Field::kComplex).q, 2);
  EXPECT_EQ(make_rank_bound(7, Field::kComplex).q, 2);
}

TEST(RankReduce, OneConstraintGivesRankOne) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 2 + trial % 4;
    const auto p = testing::feasible_members(r, 1, Field::kReal, rng);
    const FeasibilityResult f = find_psd_orthogonal(p, r, Field::kReal);
    ASSERT_EQ(f.status, FeasibilityStatus::kFound);
    const RankReduction red = rank_reduce(f.x, p, make_rank_bound(1, Field::kReal));
    EXPECT_EQ(red.rank, 1);
    EXPECT_TRUE(red.bound_guaranteed);
  }
}

TEST(RankReduce, FourConstraintsGiveRankTwo) {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 3 + trial % 3;
    const auto p = testing::feasible_members(r, 4, Field::kReal, rng);
    const FeasibilityResult f = find_psd_orthogonal(p, r, Field::kReal);
    if (f.status != FeasibilityStatus::kFound) continue;
    const RankReduction red = rank_reduce(f.x, p, make_rank_bound(4, Field::kReal));
    EXPECT_LE(red.rank, 2);
  }
}

TEST(RankReduce, CounterexampleOneCannotReduce) {
  const auto p = ce1_members();
  const RankReduction red = rank_reduce(HermMatrix::Identity(3) * (1.0 / 3.0), p,
                                        RankBound{2, Field::kReal, 5});
  EXPECT_EQ(red.rank, 3);
  EXPECT_FALSE(red.bound_guaranteed);
}

TEST(RankReduce, StepInvariants) {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 60; ++trial) {
    const Field field = trial % 2 ? Field::kComplex : Field::kReal;
    const int r = 2 + trial % 5;
    const int k = 1 + static_cast<int>(rng() % (herm_space_dim(r, field) - 1));
    const auto p = testing::feasible_members(r, k, field, rng);
    const FeasibilityResult f = find_psd_orthogonal(p, r, field);
    if (f.status != FeasibilityStatus::kFound) continue;
    const RankReduction red = rank_reduce(f.x, p, make_rank_bound(k, field));
    ASSERT_FALSE(red.steps.empty());
    for (size_t i = 0; i < red.steps.size(); ++i) {
      EXPECT_LE(red.steps[i].max_residual, 1e-9);
      EXPECT_GE(red.steps[i].min_eigenvalue, -1e-9);
      EXPECT_NEAR(red.steps[i].trace, 1.0, 1e-12);
      if (i > 0) EXPECT_LT(red.steps[i].rank, red.steps[i - 1].rank);
    }
    EXPECT_EQ(red.x.is_real(), field == Field::kReal);
    EXPECT_LE((red.factor.entries() * red.factor.entries().adjoint() - red.x.entries()).norm(),
              1e-12);
  }
}

}  // namespace
}  // namespace ssv
