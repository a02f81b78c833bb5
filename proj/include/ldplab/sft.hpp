#pragma once

// Subshifts of finite type as symbolic Smale spaces: the transition data,
// eventually periodic points, the shift, the 2^-k metric, the bracket, and
// locally constant potentials.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ldplab/error.hpp"
#include "ldplab/random.hpp"

namespace ldplab {

using Symbol = int;
using Word = std::vector<Symbol>;
using BinaryMatrix = std::vector<std::vector<int>>;

class SubshiftSpec {
 public:
  int alphabet_size() const noexcept { return size_; }
  int primitivity_power() const noexcept { return primitivity_power_; }
  const BinaryMatrix& transitions() const noexcept { return transitions_; }

  bool allowed(Symbol from, Symbol to) const {
    return transitions_[from][to] != 0;
  }
  bool valid_symbol(Symbol s) const noexcept { return s >= 0 && s < size_; }
  bool admissible(std::span<const Symbol> word) const;
  std::vector<Symbol> successors(Symbol s) const;
  std::vector<Symbol> predecessors(Symbol s) const;

  friend bool operator==(const SubshiftSpec& a, const SubshiftSpec& b) {
    return a.transitions_ == b.transitions_;
  }

 private:
  friend SubshiftSpec validate_spec(const BinaryMatrix& matrix);

  int size_ = 0;
  int primitivity_power_ = 0;
  BinaryMatrix transitions_;
};

// Checks squareness, 0/1 entries, no empty row or column, and primitivity
// (some power up to the Wielandt bound (m-1)^2 + 1 is entrywise positive).
SubshiftSpec validate_spec(const BinaryMatrix& matrix);

// All admissible words of the given length, lexicographic.
std::vector<Word> admissible_words(const SubshiftSpec& spec, int length);

// Admissible words of length n whose first symbol is `start`, lexicographic.
std::vector<Word> unstable_leaf_words(const SubshiftSpec& spec, Symbol start,
                                      int n);

// Locally constant potential: a real value for every admissible word of
// length `memory`, evaluated on the window x_0 ... x_{memory-1}.
class Potential {
 public:
  Potential() = default;
  Potential(int memory, std::map<Word, double> table);

  int memory() const noexcept { return memory_; }
  const std::map<Word, double>& table() const noexcept { return table_; }

  // Reads the first memory() symbols of `window`.
  double operator()(std::span<const Symbol> window) const;

  static Potential constant(const SubshiftSpec& spec, double value);
  static Potential indicator(const SubshiftSpec& spec, Symbol symbol);
  // phi(a) = log p_a. Normalized (pressure 0) on the full shift.
  static Potential bernoulli(const SubshiftSpec& spec,
                             const std::vector<double>& probabilities);

 private:
  int memory_ = 1;
  std::map<Word, double> table_;
};

// Largest admissible |phi| before e^phi becomes a hazard.
inline constexpr double kMaxPotentialMagnitude = 700.0;

// Table must be total on admissible memory-words and finite with magnitude
// at most kMaxPotentialMagnitude. Entries for inadmissible words are ignored.
void validate_potential(const SubshiftSpec& spec, const Potential& phi);

// Same function viewed as a potential of a larger memory.
Potential lift(const SubshiftSpec& spec, const Potential& phi, int memory);

// a_weight * a + b_weight * b at memory max(a.memory, b.memory).
Potential combine(const SubshiftSpec& spec, double a_weight,
                  const Potential& a, double b_weight, const Potential& b);

// S_n phi over the windows starting at positions 0 .. |w|-1 of
// w . continuation. Needs |continuation| >= memory - 1.
double birkhoff_sum(const SubshiftSpec& spec, const Word& w,
                    const Potential& phi, const Word& continuation = {});

struct EmpiricalMeasure {
  int window = 1;
  std::map<Word, std::int64_t> counts;
  std::int64_t length = 0;  // number of sliding windows, |w| - window + 1

  std::map<Word, double> frequencies() const;
};

// Sliding k-window counts of w without wrap-around.
EmpiricalMeasure orbital_empirical(const Word& w, int window);

// Eventually periodic bi-infinite sequence
//   ... lc lc lt | core | rt rc rc ...
// with core[0] sitting at coordinate `offset`. Index 0 lies in the core.
struct PointRep {
  Word left_cycle;
  Word left_transient;
  Word core;
  Word right_transient;
  Word right_cycle;
  long offset = 0;

  Symbol at(long i) const;
  // First and last coordinates outside the periodic tails.
  long lo() const noexcept {
    return offset - static_cast<long>(left_transient.size());
  }
  long hi() const noexcept {
    return offset + static_cast<long>(core.size() + right_transient.size()) -
           1;
  }

  // Equality of the denoted sequences, not of the representations.
  friend bool operator==(const PointRep& a, const PointRep& b);
};

// Checks structural invariants and A-admissibility of every adjacent pair,
// including junctions and cycle wrap-arounds.
void check_point(const SubshiftSpec& spec, const PointRep& x);

// x_- = ...left_cycle, x_+ = right_cycle..., core placed so core[0] is x_0.
PointRep periodic_point(const Word& cycle);

// (shift(x, s))_i = x_{i+s}.
PointRep shift(const PointRep& x, long steps);

// 2^{-min{|i| : x_i != y_i}}, 0 when the sequences are equal.
double distance(const PointRep& x, const PointRep& y);

// Past (i <= 0) of y, future (i >= 0) of x. Defined iff x_0 == y_0.
PointRep bracket(const PointRep& x, const PointRep& y);

// Random eventually periodic admissible point with x_0 == symbol_at_zero.
PointRep random_point(const SubshiftSpec& spec, Symbol symbol_at_zero,
                      CounterStream& rng);

struct AxiomReport {
  int samples = 0;
  int idempotence_violations = 0;
  int ss1_checked = 0, ss1_violations = 0;
  int ss2_checked = 0, ss2_violations = 0;
  int ss3_checked = 0, ss3_violations = 0;
  int ss4_checked = 0, ss4_violations = 0;
  int ss5_checked = 0, ss5_violations = 0;
  int ultrametric_violations = 0;
  double contraction = 0.5;
  double max_contraction_ratio = 0.0;

  int total_violations() const noexcept {
    return idempotence_violations + ss1_violations + ss2_violations +
           ss3_violations + ss4_violations + ss5_violations +
           ultrametric_violations;
  }
};

// Samples random triples with a common 0-symbol and checks [x,x] = x,
// SS1-SS3 exactly, and SS4/SS5 with lambda = 1/2.
AxiomReport axioms_check(const SubshiftSpec& spec, int sample_count,
                         std::uint64_t seed);

std::string format_word(const Word& w);

}  // namespace ldplab
