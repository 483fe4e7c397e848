// One line per acceptance criterion; exit status 1 if any fails.

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include <sys/wait.h>

#include "support.h"

namespace ssv {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

struct Complement {
  int dim = 0;
  double angle = 0.0;
};

// Complement of span(P) at D = I and its angle to the identity.
Complement complement_of(const Problem& p) {
  const PSet pset = build_pset(top_svd(p.matrix), p.structure);
  const auto c = orthonormal_complement(pset.members, pset.r, pset.field);
  Complement out;
  out.dim = static_cast<int>(c.size());
  if (out.dim != 1) return out;
  const HermMatrix unit =
      HermMatrix::Identity(pset.r) * (1.0 / std::sqrt(static_cast<double>(pset.r)));
  const double along = inner(c[0], unit);
  out.angle = std::atan2((c[0] - unit * along).norm(), std::abs(along));
  return out;
}

bool identity_complement(const Complement& c) { return c.dim == 1 && c.angle <= 1e-8; }

Outcome criterion1() {
  const Problem p = load_fixture("ce1-real-F6");
  const NuResult nu = nu_upper(p.matrix, p.structure);
  const double sigma = sigma_max(p.matrix);
  const Complement comp = complement_of(p);
  const bool eta_found =
      find_eta(build_pset(top_svd(p.matrix), p.structure)).has_value();
  const MuLowerResult lo = mu_lower_search(p, 32, 500);
  Outcome o;
  o.pass = std::abs(nu.nu - 1.0) <= 1e-6 && std::abs(sigma - 1.0) <= 1e-6 &&
           identity_complement(comp) && !eta_found && lo.value <= 1.0 - 1e-3;
  o.detail = "nu=" + fmt("%.9f", nu.nu) + " angle=" + fmt("%.1e", comp.angle) +
             " eta=" + (eta_found ? "found" : "none") + " mu_lower=" + fmt("%.6f", lo.value);
  return o;
}

Outcome criterion2() {
  const Problem p = load_fixture("ce2-morton-doyle-F4");
  const Complement comp = complement_of(p);
  const NuResult nu = nu_upper(p.matrix, p.structure);
  const EqualityReport rep = check_equality(p);
  Outcome o;
  o.pass = identity_complement(comp) && std::abs(nu.nu - 1.0) <= 1e-6 &&
           rep.verdict == Verdict::kGap;
  o.detail = "nu=" + fmt("%.9f", nu.nu) + " angle=" + fmt("%.1e", comp.angle) +
             " verdict=" + to_string(rep.verdict);
  return o;
}

Outcome equality_batch(int count, int n, std::vector<int> sizes, Field field,
                      std::uint64_t seed, bool want_real) {
  std::mt19937_64 rng(seed);
  const BlockStructure s = BlockStructure::Full(std::move(sizes));
  int ok = 0;
  double worst_norm = 0.0;
  double worst_sing = 0.0;
  double worst_imag = 0.0;
  for (int k = 0; k < count; ++k) {
    const Problem p = make_problem(random_gaussian(n, field, rng), s);
    const EqualityReport rep = check_equality(p);
    if (rep.verdict != Verdict::kEqual || !rep.delta) continue;
    const auto [smin, dnorm] = verify_perturbation(p.matrix, *rep.delta);
    const double norm_err = std::abs(dnorm * rep.nu - 1.0);
    const double imag = rep.delta->assemble().max_abs_imag();
    worst_norm = std::max(worst_norm, norm_err);
    worst_sing = std::max(worst_sing, smin);
    worst_imag = std::max(worst_imag, imag);
    bool good = norm_err <= 1e-6 && smin <= 1e-6;
    if (want_real) good = good && imag <= 1e-10;
    if (good) ++ok;
  }
  Outcome o;
  o.pass = ok == count;
  o.detail = std::to_string(ok) + "/" + std::to_string(count) +
             " equal; max|norm*nu-1|=" + fmt("%.1e", worst_norm) +
             " max sigma_min=" + fmt("%.1e", worst_sing);
  if (want_real) o.detail += " max|imag Delta|=" + fmt("%.1e", worst_imag);
  return o;
}

Outcome criterion6() {
  std::string detail;
  bool pass = true;
  const struct {
    const char* name;
    bool gap;
    bool no_real;
  } cases[] = {{"ce3-real-F3", false, true},
               {"ce4-S1-F2", true, false},
               {"ce5-S2-F0", true, false},
               {"ce6-real-S1-F1", false, true}};
  for (const auto& c : cases) {
    const Problem p = load_fixture(c.name);
    const Complement comp = complement_of(p);
    bool good = identity_complement(comp);
    if (c.gap) {
      const EqualityReport rep = check_equality(p);
      good = good && rep.verdict == Verdict::kGap && rep.gap_certified;
    }
    if (c.no_real) good = good && !real_perturbation_exists(p);
    pass = pass && good;
    detail += std::string(c.name) + (good ? ":ok " : ":FAIL ");
  }
  return {pass, detail};
}

Outcome criterion7() {
  std::mt19937_64 rng(7007);
  int total_fail = 0;
  std::string detail;
  for (Field field : {Field::kReal, Field::kComplex}) {
    int done = 0;
    int attempts = 0;
    int stalled = 0;
    int failures = 0;
    double worst = 0.0;
    while (done < 500 && attempts < 2000) {
      ++attempts;
      const int r = 2 + static_cast<int>(rng() % 5);
      const int dim_max = herm_space_dim(r, field) - 1;
      const int dim_l = 1 + static_cast<int>(rng() % static_cast<unsigned>(dim_max));
      const auto p = testing::feasible_members(r, dim_l, field, rng);
      const FeasibilityResult f = find_psd_orthogonal(p, r, field);
      if (f.status != FeasibilityStatus::kFound) {
        ++stalled;
        continue;
      }
      ++done;
      const RankBound bound = make_rank_bound(dim_l, field);
      const RankReduction red = rank_reduce(f.x, p, bound);
      bool good = red.rank <= bound.q;
      for (const ReductionStep& st : red.steps) {
        worst = std::max(worst, st.max_residual);
        good = good && st.max_residual <= 1e-9;
      }
      if (!good) ++failures;
    }
    total_fail += failures + (done < 500 ? 1 : 0);
    detail += std::string(to_string(field)) + ": " + std::to_string(done - failures) + "/" +
              std::to_string(done) + " (skipped " + std::to_string(stalled) +
              ", max residual " + fmt("%.1e", worst) + ") ";
  }
  return {total_fail == 0, detail};
}

Outcome criterion8() {
  Eigen::MatrixXd a(2, 2);
  a << 0, 4, 1, 0;
  const double nu2 = nu_upper(ComplexMatrix(a), BlockStructure::Full({1, 1})).nu;

  std::mt19937_64 rng(8008);
  std::uniform_real_distribution<double> logd(-2.0, 2.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Field field = k % 2 ? Field::kComplex : Field::kReal;
    const BlockStructure s = BlockStructure::Full({1, 2, 2});
    const ComplexMatrix m = random_gaussian(5, field, rng);
    std::vector<double> d;
    for (int j = 0; j < 3; ++j) d.push_back(std::exp(logd(rng)));
    const double base = nu_upper(m, s).nu;
    const double moved = nu_upper(apply_scaling(m, Scaling(s, d)), s).nu;
    worst = std::max(worst, std::abs(base - moved));
  }
  Outcome o;
  o.pass = std::abs(nu2 - 2.0) <= 1e-6 && worst <= 2e-6;
  o.detail = "nu([[0,4],[1,0]])=" + fmt("%.9f", nu2) + " max invariance error " +
             fmt("%.1e", worst);
  return o;
}

Outcome criterion9() {
  std::mt19937_64 rng(9009);
  int disagree = 0;
  int intersecting = 0;
  for (int k = 0; k < 500; ++k) {
    const Field field = k % 2 ? Field::kComplex : Field::kReal;
    const int r = 2 + static_cast<int>(rng() % 4);
    const int count = 1 + static_cast<int>(rng() % (herm_space_dim(r, field) - 1));
    std::vector<HermMatrix> p;
    for (int i = 0; i < count; ++i) p.push_back(testing::random_herm(r, field, rng));
    const PdIntersection pd = pd_intersection(p, r, field);
    const FeasibilityResult f = find_psd_orthogonal(p, r, field);
    bool consistent = pd.intersects == (f.status == FeasibilityStatus::kInfeasible);
    if (pd.intersects) {
      ++intersecting;
      // The reported combination must be positive definite.
      HermMatrix comb = HermMatrix::Zero(r);
      for (Eigen::Index j = 0; j < pd.z.size(); ++j) comb = comb + pd.basis[j] * pd.z(j);
      consistent = consistent && lambda_min(comb) > 0.0;
    } else {
      // The feasible point must be verified.
      consistent = consistent && f.status == FeasibilityStatus::kFound &&
                   lambda_min(f.x) >= -1e-9 && std::abs(f.x.trace() - 1.0) <= 1e-9;
      for (const HermMatrix& m : p) {
        consistent = consistent && std::abs(inner(m, f.x)) <= 1e-9;
      }
    }
    if (!consistent) ++disagree;
  }
  return {disagree == 0, std::to_string(500 - disagree) + "/500 consistent (" +
                             std::to_string(intersecting) + " intersecting)"};
}

struct Run {
  int status = -1;
  std::string out;
};

Run run_cli(const std::string& args) {
  Run r;
  const std::string cmd = std::string("SSV_SEED=42 \"") + SSV_CLI_PATH + "\" " + args;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  const int raw = pclose(pipe);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

Outcome criterion10() {
  const Run text = run_cli("paper-suite");
  const Run a = run_cli("paper-suite --json");
  const Run b = run_cli("paper-suite --json");
  Outcome o;
  o.pass = text.status == 0 && a.status == 0 && b.status == 0 && !a.out.empty() &&
           a.out == b.out;
  o.detail = "exit " + std::to_string(text.status) + ", JSON runs " +
             (a.out == b.out ? "byte-identical" : "differ") + " (" +
             std::to_string(a.out.size()) + " bytes)";
  return o;
}

}  // namespace
}  // namespace ssv

int main() {
  using ssv::Field;
  const std::pair<const char*, std::function<ssv::Outcome()>> criteria[] = {
      {"AC1  counterexample F=6 real: nu = 1, complement = I3, no eta, strict gap",
       ssv::criterion1},
      {"AC2  Morton-Doyle F=4: complement = I2, nu = 1, gap", ssv::criterion2},
      {"AC3  200 real n=10, five 2x2 blocks: equal with verified Delta",
       [] { return ssv::equality_batch(200, 10, {2, 2, 2, 2, 2}, Field::kReal, 303, false); }},
      {"AC4  200 complex n=6, three 2x2 blocks: equal with verified Delta",
       [] { return ssv::equality_batch(200, 6, {2, 2, 2}, Field::kComplex, 404, false); }},
      {"AC5  200 real, two full blocks: real Delta",
       [] { return ssv::equality_batch(200, 6, {3, 3}, Field::kReal, 505, true); }},
      {"AC6  counterexamples 3-6: complement = I, verdicts reproduced", ssv::criterion6},
      {"AC7  rank bound, 500 feasible instances per field", ssv::criterion7},
      {"AC8  nu([[0,4],[1,0]]) = 2, invariance under 50 scalings", ssv::criterion8},
      {"AC9  500 P-sets: pd_intersection agrees with feasibility", ssv::criterion9},
      {"AC10 paper suite passes and JSON is reproducible", ssv::criterion10},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    ssv::Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %s | %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  std::printf("%d/10 acceptance criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
