#pragma once

// Conditional Gibbs measures on local unstable leaves. The leaf through x is
// the set of futures extending x's past; its measure is the Gibbs Markov
// chain of G started from the last `block` symbols of that past.

#include <cstdint>
#include <limits>
#include <vector>

#include "ldplab/thermo.hpp"

namespace ldplab {

struct LeafMeasure {
  MarkovMeasure gibbs;  // equilibrium state of G on the recoded chain
  Potential potential;  // G lifted to the chain's block
  Word past;            // x_past; its last symbol is the leaf coordinate 0
  int start_state = 0;  // chain state = last `block` symbols of past
  double pressure = 0.0;

  const RecodedChain& chain() const noexcept { return gibbs.chain; }
  int block() const noexcept { return gibbs.chain.block(); }
  Symbol start_symbol() const noexcept { return past.back(); }
};

// `block` defaults to G.memory(); the past must be admissible and at least
// block symbols long.
LeafMeasure leaf_measure(const SubshiftSpec& spec, const Potential& g,
                         const Word& past, int block = 0);

// Same leaf, recoded at a larger block. Needs a long enough past.
LeafMeasure with_block(const LeafMeasure& leaf, int block);

// Mass of the cylinder [w_0 ... w_{|w|-1}] with w_0 the leaf's coordinate 0.
double cylinder_mass(const LeafMeasure& leaf, const Word& w);

// Unstable Bowen ball B(y, n, 2^-r): the cylinder of depth n + r.
double bowen_ball_mass(const LeafMeasure& leaf, const Word& y, int n, int r);

struct GibbsRatioReport {
  int r = 0;
  int n_max = 0;
  double k_min = 0.0;
  double k_max = 0.0;
  Word argmin;  // witness y (length n + max(r, block - 1))
  Word argmax;
  int argmin_n = 0;
  int argmax_n = 0;
  double half_k_min = 0.0;  // extremes over n <= n_max / 2
  double half_k_max = 0.0;
  double drift = 0.0;  // largest relative change between half and full depth
  std::int64_t words = 0;

  bool bounded() const noexcept {
    return k_min > 0.0 && k_max < std::numeric_limits<double>::infinity();
  }
  bool stable(double tolerance = 0.05) const noexcept {
    return bounded() && drift < tolerance;
  }
};

inline constexpr std::int64_t kDefaultEnumerationBudget = 100'000'000;

// Extremes of mu(B(y, n, 2^-r)) / e^{S_n G(y) - n P(G)} over every leaf word
// y and 1 <= n <= n_max.
GibbsRatioReport gibbs_ratio_audit(
    const LeafMeasure& leaf, int n_max, int r,
    std::int64_t budget = kDefaultEnumerationBudget);

// Number of admissible leaf words of the given length.
double count_leaf_words(const LeafMeasure& leaf, int length);

// Inverse-CDF sampling of the leaf chain, one cumulative table per state.
class PathSampler {
 public:
  explicit PathSampler(const MarkovMeasure& mu);

  // Next state from `state` given u in [0, 1).
  int next(int state, double u) const;

 private:
  std::vector<std::vector<double>> cumulative_;
  std::vector<std::vector<int>> targets_;
};

// Word of length n distributed as cylinder_mass. Sample `index` of a run
// seeded with `seed` draws from its own counter-based stream.
Word sample_path(const LeafMeasure& leaf, int n, std::uint64_t seed,
                 std::uint64_t index = 0);

}  // namespace ldplab
