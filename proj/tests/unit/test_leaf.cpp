#include <doctest.h>

#include <cmath>
#include <map>

#include "ldplab/leaf.hpp"
#include "oracles.hpp"

using namespace ldplab;

namespace {

const BinaryMatrix kFull2 = {{1, 1}, {1, 1}};
const BinaryMatrix kGolden = {{1, 1}, {1, 0}};
const double kGamma = (1.0 + std::sqrt(5.0)) / 2.0;

}  // namespace

TEST_CASE("leaf measures") {
  const auto full = validate_spec(kFull2);
  const auto golden = validate_spec(kGolden);
  const auto zero = Potential::constant(full, 0.0);

  for (const Word& past : {Word{0}, Word{1}, Word{1, 1, 0}}) {
    const auto leaf = leaf_measure(full, zero, past);
    CHECK(leaf.start_symbol() == past.back());
    for (const auto& w : unstable_leaf_words(full, past.back(), 6)) {
      CHECK(cylinder_mass(leaf, w) == doctest::Approx(1.0 / 32).epsilon(1e-14));
    }
  }

  const auto bern = leaf_measure(full, Potential::bernoulli(full, {0.3, 0.7}), {0});
  CHECK(cylinder_mass(bern, {0, 0, 1, 0}) == doctest::Approx(0.3 * 0.7 * 0.3).epsilon(1e-12));

  const auto parry1 = leaf_measure(golden, Potential::constant(golden, 0.0), {0, 1});
  const auto parry0 = leaf_measure(golden, Potential::constant(golden, 0.0), {0});
  CHECK(cylinder_mass(parry1, {1}) == 1.0);
  CHECK(cylinder_mass(parry1, {1, 0}) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(cylinder_mass(parry1, {1, 1}), Error);
  CHECK(cylinder_mass(parry0, {0, 0, 1}) == doctest::Approx(std::pow(kGamma, -3)).epsilon(1e-12));
  CHECK(cylinder_mass(parry0, {0, 0, 1}) == doctest::Approx(0.2360680).epsilon(1e-7));
  // Three free transitions after the fixed start symbol.
  CHECK(cylinder_mass(leaf_measure(full, zero, {1}), {1, 0, 1, 1}) == 0.125);

  CHECK_THROWS_AS(leaf_measure(golden, Potential::constant(golden, 0.0), {1, 1}), Error);
  CHECK_THROWS_AS(leaf_measure(golden, Potential::constant(golden, 0.0), {}), Error);
  try {
    cylinder_mass(parry0, {1, 0});
    FAIL("expected InconsistentStart");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InconsistentStart);
  }
}

TEST_CASE("leaf of a memory-2 potential uses the last two symbols of the past") {
  const auto full = validate_spec(kFull2);
  const Potential xor2(2, {{{0, 0}, 0.0}, {{0, 1}, 1.0}, {{1, 0}, 1.0}, {{1, 1}, 0.0}});
  const auto a = leaf_measure(full, xor2, {0, 1, 1});
  const auto b = leaf_measure(full, xor2, {1, 1});
  CHECK(a.block() == 2);
  for (const auto& w : unstable_leaf_words(full, 1, 5)) {
    CHECK(cylinder_mass(a, w) == doctest::Approx(cylinder_mass(b, w)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(leaf_measure(full, xor2, {1}), Error);
}

TEST_CASE("total mass and Kolmogorov consistency") {
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    for (const auto& g : {Potential::constant(spec, 0.0), Potential::indicator(spec, 1)}) {
      for (Symbol s = 0; s < 2; ++s) {
        const auto leaf = leaf_measure(spec, g, {s});
        for (int n = 1; n <= 20; n += (n < 10 ? 1 : 5)) {
          double total = 0.0;
          for (const auto& w : unstable_leaf_words(spec, s, n)) total += cylinder_mass(leaf, w);
          CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
        }
        for (const auto& w : unstable_leaf_words(spec, s, 7)) {
          double children = 0.0;
          for (Symbol c : spec.successors(w.back())) {
            Word child = w;
            child.push_back(c);
            children += cylinder_mass(leaf, child);
          }
          CHECK(std::abs(cylinder_mass(leaf, w) - children) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("Bowen balls are cylinders of depth n + r") {
  const auto full = validate_spec(kFull2);
  const auto leaf = leaf_measure(full, Potential::constant(full, 0.0), {0});
  CHECK(bowen_ball_mass(leaf, {0, 1, 1, 0, 1, 0, 0}, 5, 1) == doctest::Approx(1.0 / 32));
  const auto golden = validate_spec(kGolden);
  const auto parry = leaf_measure(golden, Potential::constant(golden, 0.0), {1});
  CHECK(bowen_ball_mass(parry, {1, 0, 0, 1, 0}, 3, 2) ==
        doctest::Approx(std::pow(kGamma, -3)).epsilon(1e-12));
  try {
    bowen_ball_mass(parry, {1, 0, 0}, 3, 2);
    FAIL("expected WordTooShort");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::WordTooShort);
  }
}

TEST_CASE("Gibbs ratio audit") {
  const auto full = validate_spec(kFull2);
  const auto golden = validate_spec(kGolden);

  const auto uniform = gibbs_ratio_audit(leaf_measure(full, Potential::constant(full, 0.0), {0}), 12, 0);
  CHECK(uniform.k_min == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(uniform.k_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(uniform.stable());

  // Normalized Bernoulli: the ratio is 1/p of the fixed start symbol.
  const auto bern = gibbs_ratio_audit(
      leaf_measure(full, Potential::bernoulli(full, {0.3, 0.7}), {0}), 12, 0);
  CHECK(bern.k_min == doctest::Approx(1 / 0.3).epsilon(1e-10));
  CHECK(bern.k_max == doctest::Approx(1 / 0.3).epsilon(1e-10));
  CHECK(bern.drift < 1e-10);

  for (Symbol s = 0; s < 2; ++s) {
    const auto parry = gibbs_ratio_audit(
        leaf_measure(golden, Potential::constant(golden, 0.0), {s}), 14, 1);
    MESSAGE("golden r=1 start " << s << ": K in [" << parry.k_min << ", " << parry.k_max << "]");
    CHECK(parry.bounded());
    CHECK(parry.k_max / parry.k_min <= kGamma * kGamma + 1e-9);
    CHECK(parry.stable());
  }

  // Audit extremes agree with a direct search over words.
  const auto g = Potential::bernoulli(full, {0.2, 0.8});
  const auto leaf = leaf_measure(full, g, {1});
  const double p = pressure(full, g);
  for (int r : {0, 1, 2}) {
    const auto rep = gibbs_ratio_audit(leaf, 8, r);
    double lo = 1e300;
    double hi = 0.0;
    for (int n = 1; n <= 8; ++n) {
      for (const auto& y : unstable_leaf_words(full, 1, n + std::max(r, 0))) {
        const double ratio = bowen_ball_mass(leaf, y, n, r) /
                             std::exp(birkhoff_sum(full, Word(y.begin(), y.begin() + n), g) - n * p);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
    }
    CHECK(rep.k_min == doctest::Approx(lo).epsilon(1e-12));
    CHECK(rep.k_max == doctest::Approx(hi).epsilon(1e-12));
  }

  CHECK_THROWS_AS(gibbs_ratio_audit(leaf, 30, 1, 1000), Error);
}

TEST_CASE("leaf word counts") {
  const auto golden = validate_spec(kGolden);
  const auto leaf = leaf_measure(golden, Potential::constant(golden, 0.0), {0});
  for (int n = 1; n <= 12; ++n) {
    CHECK(count_leaf_words(leaf, n) == static_cast<double>(unstable_leaf_words(golden, 0, n).size()));
  }
}

TEST_CASE("path sampling") {
  const auto full = validate_spec(kFull2);
  const auto leaf = leaf_measure(full, Potential::constant(full, 0.0), {1});
  CHECK(sample_path(leaf, 1, 9) == Word{1});
  // Same (seed, index) gives the same path; other indices differ.
  CHECK(sample_path(leaf, 40, 9, 3) == sample_path(leaf, 40, 9, 3));
  CHECK(sample_path(leaf, 40, 9, 3) != sample_path(leaf, 40, 9, 4));

  std::int64_t ones = 0;
  std::int64_t total = 0;
  for (std::uint64_t i = 0; i < 100000; ++i) {
    const auto w = sample_path(leaf, 100, 1, i);
    for (std::size_t t = 1; t < w.size(); ++t) ones += w[t];
    total += static_cast<std::int64_t>(w.size()) - 1;
  }
  CHECK(std::abs(static_cast<double>(ones) / total - 0.5) < 0.005);

  // Empirical cylinder frequencies within 4 standard errors.
  const auto golden = validate_spec(kGolden);
  for (const auto& [spec, g] :
       {std::pair{golden, Potential::constant(golden, 0.0)},
        std::pair{full, Potential::bernoulli(full, {0.3, 0.7})}}) {
    const auto l = leaf_measure(spec, g, {0});
    const int n = 6;
    const std::int64_t samples = 1000000;
    std::map<Word, std::int64_t> counts;
    for (std::int64_t i = 0; i < samples; ++i) {
      ++counts[sample_path(l, n, 42, static_cast<std::uint64_t>(i))];
    }
    for (const auto& w : unstable_leaf_words(spec, 0, n)) {
      const double p = cylinder_mass(l, w);
      const double freq = static_cast<double>(counts[w]) / samples;
      const double se = std::sqrt(p * (1 - p) / samples);
      CHECK(std::abs(freq - p) <= 4 * se);
    }
    std::int64_t seen = 0;
    for (const auto& [w, c] : counts) {
      CHECK(spec.admissible(w));
      seen += c;
    }
    CHECK(seen == samples);
  }
}
