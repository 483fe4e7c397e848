#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ssv/certificates.h"
#include "ssv/paper_suite.h"

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitGap = 1;
constexpr int kExitInput = 2;
constexpr int kExitUndecided = 3;

struct RunConfig {
  std::string path;
  double tol = 1e-8;
  double cluster_tol = 1e-8;
  double residual_tol = 1e-9;
  int seeds = -1;
  bool json = false;
  std::uint64_t seed = 0;
};

std::string fixed(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

ordered_json entry_json(ssv::Complex z, bool real) {
  if (real) return z.real();
  return ordered_json::array({z.real(), z.imag()});
}

ordered_json matrix_json(const ssv::ComplexMatrix& m) {
  ordered_json rows = ordered_json::array();
  for (int i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(entry_json(m(i, j), m.is_real()));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string entry_text(ssv::Complex z) {
  if (z.imag() == 0.0) return fixed(z.real());
  return fixed(z.real()) + (z.imag() < 0 ? "-" : "+") + fixed(std::abs(z.imag())) + "i";
}

void print_matrix(std::ostream& os, const ssv::ComplexMatrix& m, const std::string& indent) {
  for (int i = 0; i < m.rows(); ++i) {
    os << indent << "[";
    for (int j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << entry_text(m(i, j));
    os << "]\n";
  }
}

ordered_json vector_json(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::string vector_text(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fixed(v[i]);
  return s + "]";
}

ssv::Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ssv::ParseError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ssv::parse_problem(buf.str());
}

ssv::EqualityOptions equality_options(const RunConfig& cfg) {
  ssv::EqualityOptions opts;
  opts.nu.tol = cfg.tol;
  opts.nu.cluster_tol = cfg.cluster_tol;
  opts.cluster_tol = cfg.cluster_tol;
  opts.lowrank.residual_tol = cfg.residual_tol;
  return opts;
}

int cmd_nu(const RunConfig& cfg) {
  const ssv::Problem p = load_problem(cfg.path);
  ssv::NuOptions opts = equality_options(cfg).nu;
  const ssv::NuResult res = ssv::nu_upper(p.matrix, p.structure, opts);
  if (cfg.json) {
    ordered_json out;
    out["command"] = "nu";
    out["nu"] = res.nu;
    out["d_opt"] = vector_json(res.d_opt.d());
    out["iterations"] = res.iterations;
    out["gap_estimate"] = res.gap_estimate;
    out["converged"] = res.converged;
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "nu = " << fixed(res.nu) << "\n"
              << "d_opt = " << vector_text(res.d_opt.d()) << "\n"
              << "iterations = " << res.iterations << "\n"
              << "gap_estimate = " << sci(res.gap_estimate) << "\n";
    if (!res.converged) std::cout << "warning: optimizer stalled\n";
  }
  return res.converged ? kExitOk : kExitUndecided;
}

int cmd_check(const RunConfig& cfg) {
  const ssv::Problem p = load_problem(cfg.path);
  const ssv::EqualityReport rep = ssv::check_equality(p, equality_options(cfg));
  if (cfg.json) {
    ordered_json out;
    out["command"] = "check";
    out["verdict"] = ssv::to_string(rep.verdict);
    out["nu"] = rep.nu;
    out["sigma_at_opt"] = rep.sigma_at_opt;
    out["d_opt"] = vector_json(rep.d_opt.d());
    out["mu_lower"] = rep.mu_lower ? ordered_json(*rep.mu_lower) : ordered_json();
    if (rep.eta) {
      ordered_json eta = ordered_json::array();
      for (Eigen::Index i = 0; i < rep.eta->eta.size(); ++i) {
        eta.push_back(entry_json(rep.eta->eta(i), false));
      }
      out["eta"] = {{"values", std::move(eta)}, {"max_residual", rep.eta->max_residual}};
    } else {
      out["eta"] = nullptr;
    }
    if (rep.delta) {
      ordered_json blocks = ordered_json::array();
      for (const ssv::ComplexMatrix& b : rep.delta->blocks) blocks.push_back(matrix_json(b));
      out["delta"] = {{"blocks", std::move(blocks)}, {"norm", rep.delta->norm}};
    } else {
      out["delta"] = nullptr;
    }
    out["multiplicity"] = rep.multiplicity;
    out["field"] = ssv::to_string(rep.field);
    out["scaling_lambda"] = rep.scaling_lambda;
    out["rank"] = rep.rank;
    out["complement_dim"] = rep.complement_dim;
    out["gap_certified"] = rep.gap_certified;
    out["singularity_residual"] = rep.singularity_residual;
    out["norm_product"] = rep.norm_product;
    out["note"] = rep.note;
    std::cout << out.dump(2) << "\n";
  } else {
    switch (rep.verdict) {
      case ssv::Verdict::kEqual:
        std::cout << "EQUAL: mu = nu = " << fixed(rep.nu) << "\n";
        break;
      case ssv::Verdict::kGap:
        std::cout << "GAP: mu < nu = " << fixed(rep.nu) << "\n";
        break;
      case ssv::Verdict::kUndecided:
        std::cout << "UNDECIDED: nu = " << fixed(rep.nu) << "\n";
        break;
    }
    std::cout << "d_opt = " << vector_text(rep.d_opt.d()) << "\n"
              << "multiplicity = " << rep.multiplicity << ", field = "
              << ssv::to_string(rep.field) << ", complement_dim = " << rep.complement_dim
              << "\n";
    if (rep.delta) {
      std::cout << "Delta (norm " << fixed(rep.delta->norm) << ", sigma_min(I - M Delta) = "
                << sci(rep.singularity_residual) << "):\n";
      for (std::size_t j = 0; j < rep.delta->blocks.size(); ++j) {
        std::cout << "  block " << j + 1 << ":\n";
        print_matrix(std::cout, rep.delta->blocks[j], "    ");
      }
    }
    if (!rep.note.empty()) std::cout << "note: " << rep.note << "\n";
  }
  switch (rep.verdict) {
    case ssv::Verdict::kEqual:
      return kExitOk;
    case ssv::Verdict::kGap:
      return kExitGap;
    case ssv::Verdict::kUndecided:
      break;
  }
  return kExitUndecided;
}

int cmd_mu_lower(const RunConfig& cfg) {
  const ssv::Problem p = load_problem(cfg.path);
  const int seeds = cfg.seeds > 0 ? cfg.seeds : 32;
  const ssv::MuLowerResult res = ssv::mu_lower_search(p, seeds, 500, cfg.seed);
  std::optional<double> nu;
  if (p.structure.full_only()) {
    nu = ssv::nu_upper(p.matrix, p.structure, equality_options(cfg).nu).nu;
  }
  if (cfg.json) {
    ordered_json out;
    out["command"] = "mu-lower";
    out["value"] = res.value;
    out["nu"] = nu ? ordered_json(*nu) : ordered_json();
    out["gap"] = nu ? ordered_json(*nu - res.value) : ordered_json();
    out["seeds"] = seeds;
    out["singularity_residual"] = res.singularity_residual;
    if (res.delta) {
      ordered_json blocks = ordered_json::array();
      for (const ssv::ComplexMatrix& b : res.delta->blocks) blocks.push_back(matrix_json(b));
      out["delta"] = {{"blocks", std::move(blocks)}, {"norm", res.delta->norm}};
    } else {
      out["delta"] = nullptr;
    }
    std::cout << out.dump(2) << "\n";
  } else {
    std::cout << "mu_lower = " << fixed(res.value) << "\n";
    if (nu) std::cout << "nu = " << fixed(*nu) << ", gap = " << fixed(*nu - res.value) << "\n";
    if (res.delta) {
      std::cout << "Delta (norm " << fixed(res.delta->norm) << "):\n";
      for (std::size_t j = 0; j < res.delta->blocks.size(); ++j) {
        std::cout << "  block " << j + 1 << ":\n";
        print_matrix(std::cout, res.delta->blocks[j], "    ");
      }
    }
  }
  return kExitOk;
}

int cmd_paper_suite(const RunConfig& cfg) {
  ssv::SuiteOptions opts;
  if (cfg.seeds > 0) opts.seeds = cfg.seeds;
  opts.seed = cfg.seed;
  opts.equality = equality_options(cfg);
  const ssv::SuiteReport rep = ssv::run_paper_suite(opts);
  if (cfg.json) {
    std::cout << rep.to_json().dump(2) << "\n";
  } else {
    for (const ssv::SuiteCase& c : rep.cases) {
      std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << "\n"
                << "       expected: " << c.expected << "\n"
                << "       observed: " << c.observed << "\n";
    }
    std::cout << rep.passed() << "/" << rep.cases.size() << " cases passed\n";
    if (!rep.all_passed()) {
      std::cout << "failing:";
      for (const ssv::SuiteCase& c : rep.cases) {
        if (!c.pass) std::cout << " " << c.name;
      }
      std::cout << "\n";
    }
  }
  return rep.all_passed() ? kExitOk : kExitGap;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured singular value analysis"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&cfg](CLI::App* sub, bool needs_path) {
    if (needs_path) {
      sub->add_option("path", cfg.path, "Problem file (JSON)")->required();
    }
    sub->add_option("--tol", cfg.tol, "Objective tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--cluster-tol", cfg.cluster_tol, "Relative top singular value cluster width")
        ->check(CLI::PositiveNumber);
    sub->add_option("--residual-tol", cfg.residual_tol, "Feasibility residual tolerance")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seeds", cfg.seeds, "Number of random seeds")->check(CLI::PositiveNumber);
    sub->add_flag("--json", cfg.json, "JSON output");
  };
  CLI::App* nu = app.add_subcommand("nu", "Compute the D-scaling upper bound");
  CLI::App* check = app.add_subcommand("check", "Decide whether mu equals the upper bound");
  CLI::App* mu_lower = app.add_subcommand("mu-lower", "Randomized lower bound search");
  CLI::App* suite = app.add_subcommand("paper-suite", "Run the embedded counterexample suite");
  add_common(nu, true);
  add_common(check, true);
  add_common(mu_lower, true);
  add_common(suite, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (const char* env = std::getenv("SSV_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      std::cerr << "error: SSV_SEED must be a non-negative integer\n";
      return kExitInput;
    }
  }

  try {
    if (*nu) return cmd_nu(cfg);
    if (*check) return cmd_check(cfg);
    if (*mu_lower) return cmd_mu_lower(cfg);
    if (*suite) return cmd_paper_suite(cfg);
  } catch (const ssv::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ssv::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ssv::UnsupportedStructure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ssv::NumericalError& e) {
    std::cerr << "solver stalled: " << e.what() << "\n";
    return kExitUndecided;
  }
  return kExitInput;
}
