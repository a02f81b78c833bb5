#pragma once

// Large deviations for Birkhoff averages on unstable leaves: the q-curve
// Q(t) = P(G + t phi) - P(G), its Legendre conjugate (the scalar rate), the
// measure-level rate, finite-n growth, exact and Monte Carlo deviation
// masses, and rate extrapolation.
//
// Birkhoff sums on a leaf run over the free coordinates: for a leaf word y
// (y_0 fixed by the past), S_n phi sums the windows starting at 1 .. n.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ldplab/leaf.hpp"

namespace ldplab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct ErgodicRange {
  double min = 0.0;
  double max = 0.0;
};

// Minimum and maximum mean cycle weight of phi on the recoded state graph
// (Karp). These are the extremes of int phi dnu over invariant nu.
ErgodicRange ergodic_range(const SubshiftSpec& spec, const Potential& phi);

// Pressure data of G + t phi relative to G.
struct TiltedState {
  double t = 0.0;
  double q = 0.0;   // P(G + t phi) - P(G)
  double dq = 0.0;  // int phi dmu_{G + t phi}
  MarkovMeasure measure;
};

TiltedState tilted_state(const SubshiftSpec& spec, const Potential& g,
                         const Potential& phi, double t);

double q_value(const SubshiftSpec& spec, const Potential& g,
               const Potential& phi, double t);
double q_derivative(const SubshiftSpec& spec, const Potential& g,
                    const Potential& phi, double t);

struct RateValue {
  double alpha = 0.0;
  double rate = 0.0;  // +inf outside the ergodic range
  double tilt = 0.0;  // Legendre multiplier t(alpha); +-inf off range
  bool boundary = false;
};

struct RateOptions {
  double derivative_tol = 1e-10;
};

// Legendre conjugate sup_t (t alpha - Q(t)), solved on q'(t) = alpha by
// bisection with bracket expansion.
RateValue rate_scalar(const SubshiftSpec& spec, const Potential& g,
                      const Potential& phi, double alpha,
                      const RateOptions& options = {});

struct RateCurve {
  std::vector<double> alphas;
  std::vector<double> values;
  std::vector<double> tilts;
  ErgodicRange range;
};

RateCurve rate_curve(const SubshiftSpec& spec, const Potential& g,
                     const Potential& phi, const std::vector<double>& alphas);

// n evenly spaced alphas strictly inside the ergodic range.
std::vector<double> interior_grid(const ErgodicRange& range, int n);

// sup over the curve's grid of t alpha - rate(alpha); when `refine` is
// supplied, the maximizing cell is refined by golden-section search on it.
double legendre_conjugate(const RateCurve& curve, double t,
                          const std::function<double(double)>& refine = {});

// P(G) - int G dnu - h_nu for an invariant Markov measure nu.
double rate_measure(const SubshiftSpec& spec, const Potential& g,
                    const MarkovMeasure& nu);

struct ContractionReport {
  double alpha = 0.0;
  double scalar_rate = 0.0;
  double tilt = 0.0;
  double rate_at_tilted = 0.0;  // rate_measure of the tilted Gibbs measure
  int samples = 0;
  int violations = 0;
  double min_slack = kInfinity;  // min over samples of rate_measure - scalar
  double max_constraint_error = 0.0;

  bool passed() const noexcept {
    return violations == 0 && std::abs(rate_at_tilted - scalar_rate) <= 1e-6;
  }
};

ContractionReport contraction_check(const SubshiftSpec& spec,
                                    const Potential& g, const Potential& phi,
                                    double alpha, int samples,
                                    std::uint64_t seed);

// (1/n) log E_leaf[e^{S_n phi}], exact, in log-domain.
double growth_estimate(const LeafMeasure& leaf, const Potential& phi, int n);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  bool empty() const noexcept {
    return lo > hi || (lo == hi && !(lo_closed && hi_closed));
  }
  bool contains(double x) const noexcept;
  std::string to_string() const;
};

// "a:b" (closed) or bracket notation "[a,b)", "(a,b]" and so on.
Interval parse_interval(const std::string& text);

enum class DeviationMethod { ExactEnumeration, DpLattice, DpBinned, MonteCarlo };
std::string_view to_string(DeviationMethod method) noexcept;

struct DeviationPoint {
  int n = 0;
  double mass = 0.0;
  double mass_lower = 0.0;  // certified bracket (equal to mass when exact)
  double mass_upper = 0.0;
  double log_mass = -kInfinity;
  double std_error = 0.0;   // Monte Carlo only
  DeviationMethod method = DeviationMethod::ExactEnumeration;
  double bin_width = 0.0;   // DpBinned only
  std::int64_t samples = 0;
  double tilt = 0.0;
};

struct DeviationSeries {
  Interval interval;
  std::vector<DeviationPoint> points;
};

enum class ExactMode { Auto, Enumerate, Dp };

struct ExactOptions {
  ExactMode mode = ExactMode::Auto;
  std::int64_t budget = kDefaultEnumerationBudget;
  double bin_width = 1e-3;
};

// Common lattice of a set of reals: values[i] == numerators[i] / denominator
// with denominator <= 10^6 (rational reconstruction).
struct Lattice {
  std::int64_t denominator = 1;
  std::vector<std::int64_t> numerators;
};
std::optional<Lattice> detect_lattice(const std::vector<double>& values);

// Leaf mass of {y : S_n phi(y) / n in L}.
DeviationPoint deviation_mass_exact(const LeafMeasure& leaf,
                                    const Potential& phi, const Interval& l,
                                    int n, const ExactOptions& options = {});

DeviationSeries deviation_series_exact(const LeafMeasure& leaf,
                                       const Potential& phi,
                                       const Interval& l,
                                       const std::vector<int>& lengths,
                                       const ExactOptions& options = {});

struct McOptions {
  std::int64_t samples = 100'000;
  std::optional<double> tilt;  // importance-sampling tilt t
  std::uint64_t seed = 0;
  int threads = 0;  // 0: hardware concurrency
};

// Unbiased estimate with standard error. With a tilt, paths come from the
// leaf measure of G + t phi and carry exact per-step likelihood ratios.
DeviationPoint deviation_mass_mc(const LeafMeasure& leaf, const Potential& phi,
                                 const Interval& l, int n,
                                 const McOptions& options);

// Tilt whose tilted mean is the endpoint of L nearest the untilted mean;
// 0 when the mean lies in L.
double recommended_tilt(const SubshiftSpec& spec, const Potential& g,
                        const Potential& phi, const Interval& l);

struct RateFit {
  double estimate = 0.0;  // a
  double log_coefficient = 0.0;  // b
  double inverse_coefficient = 0.0;  // c
  double residual = 0.0;  // RMS of the least-squares fit
  bool monotone = true;   // fitted curve monotone over the data range
  int points = 0;
};

// Least-squares fit of -(1/n) log m_n against a + b log(n)/n + c/n.
RateFit rate_fit(const DeviationSeries& series);

}  // namespace ldplab
