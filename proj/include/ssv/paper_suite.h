#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssv/certificates.h"

namespace ssv {

/// Named problem file embedded in the library.
struct Fixture {
  std::string name;
  std::string json;
};

/// The six counterexample problems in factor form, in order.
const std::vector<Fixture>& counterexample_fixtures();
/// Looks up an embedded fixture by name; throws std::out_of_range.
Problem load_fixture(const std::string& name);

/// n x n matrix with independent standard normal entries (real and imaginary
/// parts each standard normal in the complex field).
ComplexMatrix random_gaussian(int n, Field field, std::mt19937_64& rng);

struct SuiteCase {
  std::string name;
  std::string expected;
  std::string observed;
  bool pass = false;
  /// Case-specific numbers (nu, complement dimension, counts, ...).
  nlohmann::ordered_json details;
};

struct SuiteOptions {
  /// Random instances per equality batch.
  int seeds = 10;
  std::uint64_t seed = 0;
  EqualityOptions equality;
};

struct SuiteReport {
  std::vector<SuiteCase> cases;

  int passed() const;
  bool all_passed() const { return passed() == static_cast<int>(cases.size()); }
  nlohmann::ordered_json to_json() const;
};

/// Runs the counterexamples against their expected outcomes, then the
/// randomized equality checks for real F = 5, complex F = 3 and real F = 2.
SuiteReport run_paper_suite(const SuiteOptions& opts = {});

}  // namespace ssv
