#include <doctest.h>

#include <cmath>

#include "ldplab/ldp.hpp"
#include "oracles.hpp"

using namespace ldplab;

namespace {

const BinaryMatrix kFull2 = {{1, 1}, {1, 1}};
const BinaryMatrix kGolden = {{1, 1}, {1, 0}};
const double kGamma = (1.0 + std::sqrt(5.0)) / 2.0;

double closed_rate(double alpha) { return oracle::relative_entropy(alpha, 0.5); }

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an ldplab::Error");
  return ErrorKind::InvalidArgument;
}

// Brute-force leaf mass of {S_n phi / n in L} with S_n over windows 1..n.
double brute_deviation(const BinaryMatrix& a, const LeafMeasure& leaf,
                       const Potential& phi, const Interval& l, int n) {
  const int k = phi.memory();
  double mass = 0.0;
  for (const auto& w : oracle::words(a, n + k)) {
    if (w[0] != leaf.start_symbol()) continue;
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += phi(Word(w.begin() + i, w.begin() + i + k));
    if (l.contains(s / n)) mass += cylinder_mass(leaf, w);
  }
  return mass;
}

}  // namespace

TEST_CASE("q-curve") {
  const auto full = validate_spec(kFull2);
  const auto golden = validate_spec(kGolden);
  const auto zero = Potential::constant(full, 0.0);
  const auto ind1 = Potential::indicator(full, 1);
  CHECK(q_value(full, zero, ind1, 0.0) == 0.0);
  CHECK(q_value(full, zero, ind1, 1.0) ==
        doctest::Approx(std::log((1 + std::exp(1.0)) / 2)).epsilon(1e-13));
  CHECK(q_value(full, zero, ind1, 1.0) == doctest::Approx(0.6201145).epsilon(1e-7));
  for (double t : {-2.0, -0.5, 0.3, 2.5}) {
    CHECK(q_value(full, zero, ind1, t) ==
          doctest::Approx(std::log((1 + std::exp(t)) / 2)).epsilon(1e-12));
  }
  const auto gzero = Potential::constant(golden, 0.0);
  const auto gind1 = Potential::indicator(golden, 1);
  double prev = 0.0;
  for (double t : {-1.0, -5.0, -10.0, -30.0}) {
    const double q = q_value(golden, gzero, gind1, t);
    CHECK(q >= -std::log(kGamma) - 1e-12);
    CHECK(q < prev);
    prev = q;
  }
  CHECK(prev == doctest::Approx(-std::log(kGamma)).epsilon(1e-9));

  CHECK(q_derivative(full, zero, ind1, 0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(q_derivative(full, zero, ind1, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  const auto c = Potential::constant(golden, 1.25);
  for (double t : {-3.0, 0.0, 2.0}) {
    CHECK(q_derivative(golden, gzero, c, t) == doctest::Approx(1.25).epsilon(1e-12));
  }
  // q' agrees with a central difference of q.
  const auto bern = Potential::bernoulli(full, {0.3, 0.7});
  for (double t : {-1.5, 0.0, 0.8}) {
    const double h = 1e-5;
    const double fd = (q_value(full, bern, ind1, t + h) - q_value(full, bern, ind1, t - h)) / (2 * h);
    CHECK(q_derivative(full, bern, ind1, t) == doctest::Approx(fd).epsilon(1e-7));
  }
}

TEST_CASE("ergodic range") {
  const auto full = validate_spec(kFull2);
  const auto golden = validate_spec(kGolden);
  const auto r1 = ergodic_range(full, Potential::indicator(full, 1));
  CHECK(r1.min == doctest::Approx(0.0));
  CHECK(r1.max == doctest::Approx(1.0));
  const auto r2 = ergodic_range(golden, Potential::indicator(golden, 1));
  CHECK(r2.min == doctest::Approx(0.0));
  CHECK(r2.max == doctest::Approx(0.5));
  const auto r3 = ergodic_range(golden, Potential::constant(golden, -0.7));
  CHECK(r3.min == doctest::Approx(-0.7));
  CHECK(r3.max == doctest::Approx(-0.7));

  // Karp against exhaustive simple-cycle search on random primitive graphs.
  CounterStream rng(123, 0);
  int tested = 0;
  while (tested < 60) {
    const int m = 3 + static_cast<int>(rng.below(3));
    BinaryMatrix a(m, std::vector<int>(m));
    for (auto& row : a)
      for (int& v : row) v = rng.next_double() < 0.5;
    if (oracle::primitivity_power(a) == 0) continue;
    const auto spec = validate_spec(a);
    std::map<Word, double> table;
    std::vector<double> w(m);
    for (int s = 0; s < m; ++s) {
      w[s] = std::round(10 * (rng.next_double() * 2 - 1)) / 4;
      table[{s}] = w[s];
    }
    const auto range = ergodic_range(spec, Potential(1, table));
    const auto [lo, hi] = oracle::cycle_mean_range(a, w);
    CHECK(range.min == doctest::Approx(lo).epsilon(1e-12));
    CHECK(range.max == doctest::Approx(hi).epsilon(1e-12));
    ++tested;
  }
}

TEST_CASE("scalar rate") {
  const auto full = validate_spec(kFull2);
  const auto zero = Potential::constant(full, 0.0);
  const auto ind1 = Potential::indicator(full, 1);
  const auto mid = rate_scalar(full, zero, ind1, 0.5);
  CHECK(std::abs(mid.rate) < 1e-12);
  CHECK(std::abs(mid.tilt) < 1e-8);
  const auto r = rate_scalar(full, zero, ind1, 0.75);
  CHECK(r.rate == doctest::Approx(0.1308120).epsilon(1e-6));
  CHECK(std::abs(r.rate - closed_rate(0.75)) < 1e-10);
  CHECK(r.tilt == doctest::Approx(std::log(3.0)).epsilon(1e-8));
  CHECK_FALSE(r.boundary);

  const auto out = rate_scalar(full, zero, ind1, 1.5);
  CHECK(std::isinf(out.rate));
  CHECK(out.tilt == kInfinity);
  CHECK(rate_scalar(full, zero, ind1, -0.1).tilt == -kInfinity);

  // Endpoints: the infimum sits on the fixed points 0^inf and 1^inf.
  const auto top = rate_scalar(full, zero, ind1, 1.0);
  CHECK(top.boundary);
  CHECK(top.rate == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  const auto golden = validate_spec(kGolden);
  const auto gtop = rate_scalar(golden, Potential::constant(golden, 0.0),
                                Potential::indicator(golden, 1), 0.5);
  CHECK(gtop.boundary);
  CHECK(gtop.rate == doctest::Approx(std::log(kGamma)).epsilon(1e-9));

  // Non-zero G: Bernoulli(p) potential gives the relative entropy to p.
  const auto bern = Potential::bernoulli(full, {0.3, 0.7});
  for (double alpha : {0.2, 0.5, 0.7, 0.9}) {
    CHECK(rate_scalar(full, bern, ind1, alpha).rate ==
          doctest::Approx(oracle::relative_entropy(alpha, 0.7)).epsilon(1e-9));
  }
}

TEST_CASE("rate curves: nonnegative, convex, monotone, zero at the mean") {
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    const auto ind1 = Potential::indicator(spec, 1);
    for (const auto& g : {Potential::constant(spec, 0.0), Potential::indicator(spec, 0)}) {
      const auto grid = interior_grid(ergodic_range(spec, ind1), 41);
      const auto curve = rate_curve(spec, g, ind1, grid);
      const double mean = q_derivative(spec, g, ind1, 0.0);
      const double step = grid[1] - grid[0];
      std::size_t argmin = 0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(curve.values[i] >= 0.0);
        if (curve.values[i] < curve.values[argmin]) argmin = i;
        if (i > 0 && grid[i] <= mean) CHECK(curve.values[i] <= curve.values[i - 1] + 1e-12);
        if (i > 0 && grid[i - 1] >= mean) CHECK(curve.values[i] >= curve.values[i - 1] - 1e-12);
      }
      for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        CHECK(curve.values[i - 1] - 2 * curve.values[i] + curve.values[i + 1] >= -1e-8);
      }
      CHECK(std::abs(grid[argmin] - mean) <= step);
      CHECK(rate_scalar(spec, g, ind1, mean).rate < 1e-12);
    }
  }
}

TEST_CASE("duality: the conjugate of the rate recovers q") {
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    const auto g = Potential::constant(spec, 0.0);
    const auto phi = Potential::indicator(spec, 1);
    const auto range = ergodic_range(spec, phi);
    std::vector<double> grid = interior_grid(range, 199);
    grid.insert(grid.begin(), range.min);
    grid.push_back(range.max);
    const auto curve = rate_curve(spec, g, phi, grid);
    const auto refine = [&](double alpha) { return rate_scalar(spec, g, phi, alpha).rate; };
    for (int i = -6; i <= 6; ++i) {
      const double t = 0.5 * i;
      CHECK(std::abs(legendre_conjugate(curve, t, refine) - q_value(spec, g, phi, t)) <= 1e-6);
    }
  }
}

TEST_CASE("measure-level rate") {
  const auto full = validate_spec(kFull2);
  const auto zero = Potential::constant(full, 0.0);
  CHECK(std::abs(rate_measure(full, zero, equilibrium_state(full, zero))) < 1e-12);
  const auto chain = recode(full, 1);
  Eigen::MatrixXd fixed(2, 2);
  fixed << 1.0, 0.0, 0.0, 1.0;
  Eigen::VectorXd at0(2);
  at0 << 1.0, 0.0;
  // Not irreducible, but a valid invariant Markov measure with given pi.
  const auto delta0 = make_markov_measure(chain, fixed, at0);
  CHECK(rate_measure(full, zero, delta0) == doctest::Approx(std::log(2.0)).epsilon(1e-13));
  const double p = 0.3;
  const auto g = Potential::bernoulli(full, {p, 1 - p});
  for (double q : {0.1, 0.3, 0.6}) {
    const auto nu = equilibrium_state(full, Potential::bernoulli(full, {q, 1 - q}));
    CHECK(rate_measure(full, g, nu) == doctest::Approx(oracle::relative_entropy(q, p)).epsilon(1e-10));
  }
  const auto golden = validate_spec(kGolden);
  CHECK(kind_of([&] { rate_measure(full, zero, equilibrium_state(golden, Potential::constant(golden, 0))); }) ==
        ErrorKind::IncompatibleSupport);
}

TEST_CASE("contraction: rate_measure dominates rate_scalar") {
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    const auto phi = Potential::indicator(spec, 1);
    const auto range = ergodic_range(spec, phi);
    for (const auto& g : {Potential::constant(spec, 0.0), Potential::indicator(spec, 0)}) {
      for (double f : {0.15, 0.4, 0.8}) {
        const double alpha = range.min + f * (range.max - range.min);
        const auto report = contraction_check(spec, g, phi, alpha, 200, 9);
        CHECK(report.passed());
        CHECK(report.min_slack >= -1e-8);
        CHECK(report.max_constraint_error <= 1e-9);
      }
      // Unconstrained random measures: I(nu) >= I~(int phi dnu).
      const auto chain = recode(spec, 1);
      CounterStream rng(4, 4);
      for (int i = 0; i < 300; ++i) {
        const auto nu = random_markov_measure(chain, rng);
        const double alpha = integrate(nu, phi);
        CHECK(rate_measure(spec, g, nu) >= rate_scalar(spec, g, phi, alpha).rate - 1e-8);
      }
    }
  }
}

TEST_CASE("growth on the leaf") {
  const auto full = validate_spec(kFull2);
  const auto zero = Potential::constant(full, 0.0);
  const auto ind1 = Potential::indicator(full, 1);
  const auto leaf = leaf_measure(full, zero, {0});
  for (int n : {1, 5, 40}) {
    CHECK(std::abs(growth_estimate(leaf, zero, n)) < 1e-14);
    CHECK(growth_estimate(leaf, ind1, n) ==
          doctest::Approx(std::log((1 + std::exp(1.0)) / 2)).epsilon(1e-13));
  }
  // Brute force over leaf words, and the C/n approach to Q.
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    const auto phi = Potential::indicator(spec, 1);
    for (const auto& g : {Potential::constant(spec, 0.0), Potential::bernoulli(spec, {0.3, 0.7})}) {
      for (Symbol s = 0; s < 2; ++s) {
        const auto l = leaf_measure(spec, g, {s});
        for (int n = 1; n <= 10; ++n) {
          double z = 0.0;
          for (const auto& w : unstable_leaf_words(spec, s, n + 1)) {
            double sum = 0.0;
            for (int i = 1; i <= n; ++i) sum += phi(Word{w[i]});
            z += cylinder_mass(l, w) * std::exp(sum);
          }
          CHECK(growth_estimate(l, phi, n) == doctest::Approx(std::log(z) / n).epsilon(1e-12));
        }
        const double q = q_value(spec, g, phi, 1.0);
        double c = 0.0;
        for (int n = 5; n <= 40; ++n) c = std::max(c, n * std::abs(growth_estimate(l, phi, n) - q));
        MESSAGE("growth C = " << c);
        CHECK(c < 2.0);
        CHECK(std::abs(growth_estimate(l, phi, 200) - q) <= c / 200 + 1e-12);
      }
    }
  }
}

TEST_CASE("intervals") {
  const auto a = parse_interval("0.7:1");
  CHECK(a.lo == 0.7);
  CHECK(a.hi == 1.0);
  CHECK(a.lo_closed);
  CHECK(a.hi_closed);
  const auto b = parse_interval("(0.25, 0.5]");
  CHECK_FALSE(b.lo_closed);
  CHECK(b.hi_closed);
  CHECK_FALSE(b.contains(0.25));
  CHECK(b.contains(0.5));
  CHECK(b.to_string() == "(0.25,0.5]");
  CHECK(parse_interval("[1,1]").contains(1.0));
  CHECK(kind_of([] { parse_interval("[1,1)"); }) == ErrorKind::EmptyInterval);
  CHECK((Interval{1.0, 1.0, true, false}).empty());
  CHECK(kind_of([] { parse_interval("[0,1"); }) == ErrorKind::InvalidArgument);
  CHECK(kind_of([] { parse_interval("x:1"); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("lattice detection") {
  const auto l1 = detect_lattice({0.0, 1.0, -3.0});
  REQUIRE(l1);
  CHECK(l1->denominator == 1);
  CHECK(l1->numerators == std::vector<std::int64_t>{0, 1, -3});
  const auto l2 = detect_lattice({0.5, 0.25, 1.0 / 3.0});
  REQUIRE(l2);
  CHECK(l2->denominator == 12);
  CHECK_FALSE(detect_lattice({std::sqrt(2.0)}));
  CHECK_FALSE(detect_lattice({std::log(0.3)}));
  CHECK_FALSE(detect_lattice({1.0 / 999983.0, 1.0 / 999979.0}));
}

TEST_CASE("exact deviation masses") {
  const auto full = validate_spec(kFull2);
  const auto golden = validate_spec(kGolden);
  const auto zero = Potential::constant(full, 0.0);
  const auto ind1 = Potential::indicator(full, 1);
  const auto leaf = leaf_measure(full, zero, {0});
  const auto l = parse_interval("0.7:1");

  // Binomial tail over the 20 free symbols: sum_{k >= 14} C(20, k) / 2^20.
  std::int64_t tail = 0;
  for (int k = 14; k <= 20; ++k) tail += oracle::binomial(20, k);
  CHECK(tail == 60460);
  const double exact = static_cast<double>(tail) / 1048576.0;
  for (auto mode : {ExactMode::Auto, ExactMode::Enumerate, ExactMode::Dp}) {
    ExactOptions o;
    o.mode = mode;
    const auto p = deviation_mass_exact(leaf, ind1, l, 20, o);
    CHECK(p.mass == doctest::Approx(exact).epsilon(1e-13));
    CHECK(p.log_mass == doctest::Approx(std::log(exact)).epsilon(1e-13));
    CHECK(p.mass_lower == p.mass);
    CHECK(p.mass_upper == p.mass);
  }
  CHECK(to_string(deviation_mass_exact(leaf, ind1, l, 20).method) == "dp-lattice");
  ExactOptions enumerate;
  enumerate.mode = ExactMode::Enumerate;
  CHECK(to_string(deviation_mass_exact(leaf, ind1, l, 20, enumerate).method) == "exact-enumeration");
  enumerate.budget = 1000;
  CHECK(kind_of([&] { deviation_mass_exact(leaf, ind1, l, 20, enumerate); }) ==
        ErrorKind::BudgetExceeded);

  // Large n against the log binomial tail.
  for (int n : {100, 300, 500}) {
    const int kmin = static_cast<int>(std::ceil(0.7 * n - 1e-9));
    CHECK(deviation_mass_exact(leaf, ind1, l, n).log_mass ==
          doctest::Approx(oracle::log_binomial_tail(n, kmin, 0.5)).epsilon(1e-10));
  }

  // Full range has mass 1; above the ergodic max has mass 0.
  CHECK(deviation_mass_exact(leaf, ind1, parse_interval("0:1"), 30).mass ==
        doctest::Approx(1.0).epsilon(1e-13));
  const auto gleaf = leaf_measure(golden, Potential::constant(golden, 0.0), {0});
  const auto gind1 = Potential::indicator(golden, 1);
  // Averages above the ergodic max 1/2 only occur through the O(1/n)
  // boundary: for even n the tail above 1/2 is empty, and for every n the
  // tail above 1/2 + 1/(2n) is.
  for (Symbol s : {0, 1}) {
    const auto gl = leaf_measure(golden, Potential::constant(golden, 0.0), {s});
    for (int n = 2; n <= 60; n += (n < 12 ? 1 : 7)) {
      const Interval above{0.5 + 0.5 / n, 1.0, false, true};
      CHECK(deviation_mass_exact(gl, gind1, above, n).mass == 0.0);
      CHECK(deviation_mass_exact(gl, gind1, above, n).log_mass == -kInfinity);
      if (n % 2 == 0) {
        CHECK(deviation_mass_exact(gl, gind1, parse_interval("(0.5,1]"), n).mass == 0.0);
      }
    }
  }
  CHECK(deviation_mass_exact(gleaf, gind1, parse_interval("(0.5,1]"), 5).mass > 0.0);
  CHECK(kind_of([&] { deviation_mass_exact(leaf, ind1, parse_interval("[1,0]"), 5); }) ==
        ErrorKind::EmptyInterval);
}

TEST_CASE("exact methods agree with brute force and nest") {
  for (const auto& a : {kFull2, kGolden}) {
    const auto spec = validate_spec(a);
    CounterStream rng(8, 8);
    std::map<Word, double> lattice_table;
    std::map<Word, double> real_table;
    for (const auto& w : admissible_words(spec, 2)) {
      lattice_table[w] = static_cast<double>(rng.below(5)) / 4.0 - 0.5;
      real_table[w] = rng.next_double() * std::sqrt(2.0);
    }
    const Potential lat(2, lattice_table);
    const Potential real(2, real_table);
    for (const auto& g : {Potential::constant(spec, 0.0), Potential::indicator(spec, 1)}) {
      const auto leaf = leaf_measure(spec, g, {0, 0});
      for (const auto& phi : {lat, real}) {
        const auto range = ergodic_range(spec, phi);
        const double mid = 0.5 * (range.min + range.max);
        const Interval inner{mid - 0.1, mid + 0.1, true, false};
        const Interval outer{mid - 0.3, mid + 0.3, true, true};
        for (int n : {3, 8, 12}) {
          const double brute = brute_deviation(a, leaf, phi, inner, n);
          ExactOptions en;
          en.mode = ExactMode::Enumerate;
          CHECK(deviation_mass_exact(leaf, phi, inner, n, en).mass ==
                doctest::Approx(brute).epsilon(1e-12));
          ExactOptions dp;
          dp.mode = ExactMode::Dp;
          dp.bin_width = 1e-3;
          const auto d = deviation_mass_exact(leaf, phi, inner, n, dp);
          CHECK(d.mass_lower <= brute + 1e-12);
          CHECK(d.mass_upper >= brute - 1e-12);
          CHECK(d.mass >= d.mass_lower);
          CHECK(d.mass <= d.mass_upper);
          if (&phi == &lat) CHECK(d.mass == doctest::Approx(brute).epsilon(1e-12));
          const auto o = deviation_mass_exact(leaf, phi, outer, n, en);
          CHECK(o.mass >= brute - 1e-15);
          CHECK(o.mass <= 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("sandwich: binned exact rates bracket the closed form") {
  // phi = sqrt(2) * 1_[1] is off every small lattice; L = [sqrt(2) beta, sqrt(2)].
  const auto full = validate_spec(kFull2);
  const double s2 = std::sqrt(2.0);
  const Potential phi(1, {{{0}, 0.0}, {{1}, s2}});
  REQUIRE_FALSE(detect_lattice({0.0, s2}));
  for (double p : {0.5, 0.3}) {
    const auto g = Potential::bernoulli(full, {1 - p, p});
    const auto leaf = leaf_measure(full, g, {0});
    const double beta = p + 0.2;
    const Interval l{beta * s2, s2, true, true};
    const double rate = oracle::relative_entropy(beta, p);
    CHECK(rate_scalar(full, g, phi, beta * s2).rate == doctest::Approx(rate).epsilon(1e-9));
    ExactOptions o;
    o.mode = ExactMode::Dp;
    o.bin_width = 1e-3;
    for (int n : {200, 300, 400}) {
      const auto d = deviation_mass_exact(leaf, phi, l, n, o);
      CHECK(to_string(d.method) == "dp-binned");
      const double upper_rate = -std::log(d.mass_lower) / n;
      const double lower_rate = -std::log(d.mass_upper) / n;
      CHECK(lower_rate >= rate - 0.01);
      CHECK(upper_rate <= rate + std::log(n) / n + 0.01);
    }
  }
}

TEST_CASE("Monte Carlo deviation masses") {
  const auto full = validate_spec(kFull2);
  const auto zero = Potential::constant(full, 0.0);
  const auto ind1 = Potential::indicator(full, 1);
  const auto leaf = leaf_measure(full, zero, {0});
  const auto l = parse_interval("0.7:1");

  McOptions all;
  all.samples = 5000;
  const auto whole = deviation_mass_mc(leaf, ind1, parse_interval("0:1"), 20, all);
  CHECK(whole.mass == 1.0);
  CHECK(whole.std_error == 0.0);
  CHECK(to_string(whole.method) == "monte-carlo");

  const double tilt = recommended_tilt(full, zero, ind1, l);
  CHECK(tilt == doctest::Approx(std::log(7.0 / 3.0)).epsilon(1e-8));

  const double exact = deviation_mass_exact(leaf, ind1, l, 20).mass;
  McOptions o;
  o.samples = 200000;
  o.tilt = tilt;
  o.seed = 17;
  const auto est = deviation_mass_mc(leaf, ind1, l, 20, o);
  CHECK(std::abs(est.mass - exact) <= 3 * est.std_error);
  CHECK(est.samples == 200000);

  // Deterministic in the seed and independent of the thread count.
  for (int threads : {1, 2, 3}) {
    McOptions t = o;
    t.samples = 50000;
    t.threads = threads;
    McOptions ref = t;
    ref.threads = 1;
    const auto x = deviation_mass_mc(leaf, ind1, l, 20, t);
    const auto y = deviation_mass_mc(leaf, ind1, l, 20, ref);
    CHECK(x.mass == y.mass);
    CHECK(x.std_error == y.std_error);
  }

  // Unbiasedness over 50 seeds on enumeration-feasible cases, with and
  // without tilting, on both systems.
  const auto golden = validate_spec(kGolden);
  struct Case {
    SubshiftSpec spec;
    Potential g;
    Potential phi;
    Interval l;
    std::optional<double> tilt;
  };
  const std::vector<Case> cases = {
      {full, zero, ind1, l, tilt},
      {full, Potential::bernoulli(full, {0.3, 0.7}), ind1, parse_interval("[0.2,0.5)"), std::nullopt},
      {golden, Potential::constant(golden, 0.0), Potential::indicator(golden, 1),
       parse_interval("0.4:0.5"), 1.0},
  };
  for (const auto& c : cases) {
    const auto lf = leaf_measure(c.spec, c.g, {0});
    const double truth = deviation_mass_exact(lf, c.phi, c.l, 16).mass;
    double sum = 0.0;
    double var = 0.0;
    const int seeds = 50;
    for (int s = 0; s < seeds; ++s) {
      McOptions m;
      m.samples = 20000;
      m.tilt = c.tilt;
      m.seed = static_cast<std::uint64_t>(1000 + s);
      const auto e = deviation_mass_mc(lf, c.phi, c.l, 16, m);
      sum += e.mass;
      var += e.std_error * e.std_error;
    }
    const double mean = sum / seeds;
    const double combined = std::sqrt(var) / seeds;
    CHECK(std::abs(mean - truth) <= 4 * combined);
  }
}

TEST_CASE("rate fit") {
  DeviationSeries synthetic;
  for (int n = 10; n <= 100; n += 10) {
    DeviationPoint p;
    p.n = n;
    p.mass = std::exp(-0.37 * n);
    synthetic.points.push_back(p);
  }
  const auto f = rate_fit(synthetic);
  CHECK(f.estimate == doctest::Approx(0.37).epsilon(1e-10));
  CHECK(std::abs(f.log_coefficient) < 1e-9);
  CHECK(f.residual < 1e-12);
  CHECK(f.points == 10);

  DeviationSeries ones = synthetic;
  for (auto& p : ones.points) p.mass = 1.0;
  CHECK(std::abs(rate_fit(ones).estimate) < 1e-14);

  const auto full = validate_spec(kFull2);
  const auto leaf = leaf_measure(full, Potential::constant(full, 0.0), {0});
  std::vector<int> lengths;
  for (int n = 100; n <= 500; n += 50) lengths.push_back(n);
  const auto series = deviation_series_exact(leaf, Potential::indicator(full, 1),
                                             parse_interval("0.7:1"), lengths);
  const auto fit = rate_fit(series);
  CHECK(std::abs(fit.estimate - 0.0822827) < 0.005);
  CHECK(std::abs(fit.estimate - closed_rate(0.7)) < 0.005);
  CHECK(fit.log_coefficient == doctest::Approx(0.5).epsilon(0.2));

  DeviationSeries short_series = synthetic;
  short_series.points.resize(3);
  CHECK(kind_of([&] { rate_fit(short_series); }) == ErrorKind::DegenerateFit);
  DeviationSeries zero_mass = synthetic;
  zero_mass.points[2].mass = 0.0;
  CHECK(kind_of([&] { rate_fit(zero_mass); }) == ErrorKind::DegenerateFit);
}
