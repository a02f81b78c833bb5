#pragma once

// Transfer-operator thermodynamics for locally constant potentials on a
// subshift of finite type: higher-block recoding, the weighted transfer
// matrix, Perron eigendata, pressure, and Gibbs Markov measures.

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "ldplab/random.hpp"
#include "ldplab/sft.hpp"

namespace ldplab {

// Higher-block presentation: states are the admissible words of length
// `block`; w -> w' iff they overlap in block - 1 symbols (block = 1: A itself).
class RecodedChain {
 public:
  RecodedChain() = default;
  RecodedChain(SubshiftSpec base, int block);

  const SubshiftSpec& base() const noexcept { return base_; }
  int block() const noexcept { return block_; }
  int size() const noexcept { return static_cast<int>(states_.size()); }
  const std::vector<Word>& states() const noexcept { return states_; }
  const Word& state(int i) const { return states_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& successors(int i) const {
    return successors_[static_cast<std::size_t>(i)];
  }
  bool adjacent(int from, int to) const {
    return adjacency_(from, to) != 0.0;
  }
  const Eigen::MatrixXd& adjacency() const noexcept { return adjacency_; }

  // -1 when `w` is not a state.
  int index_of(const Word& w) const;
  // State reached from `from` by appending `next`; -1 if not allowed.
  int step(int from, Symbol next) const;

 private:
  SubshiftSpec base_;
  int block_ = 1;
  std::vector<Word> states_;
  std::map<Word, int> index_;
  std::vector<std::vector<int>> successors_;
  Eigen::MatrixXd adjacency_;
};

RecodedChain recode(const SubshiftSpec& spec, int block);

// Per-state potential values on a chain with block >= phi.memory().
Eigen::VectorXd state_values(const RecodedChain& chain, const Potential& phi);

// M_{w,w'} = adjacency(w,w') * e^{phi(w) - log_scale}. The true transfer
// matrix is entries * e^{log_scale}; log_scale is nonzero only when the
// potential is large enough to threaten overflow.
struct WeightedMatrix {
  RecodedChain chain;
  Eigen::MatrixXd entries;
  double log_scale = 0.0;
};

WeightedMatrix transfer_matrix(const RecodedChain& chain, const Potential& phi);

struct RPFData {
  double eigenvalue = 0.0;      // of `entries` (scaled matrix)
  double log_eigenvalue = 0.0;  // log of the true Perron root
  Eigen::VectorXd right;        // h > 0
  Eigen::VectorXd left;         // nu > 0, sum 1, nu . h = 1
  double residual = 0.0;
  long iterations = 0;
};

struct SolverOptions {
  double tol = 1e-13;
  long max_iter = 1'000'000;
};

// True iff the nonnegative matrix's pattern is irreducible and aperiodic.
bool is_primitive(const Eigen::MatrixXd& m);

// Power iteration with renormalization on M and M^T.
RPFData rpf_solve(const WeightedMatrix& m, const SolverOptions& options = {});

// P(phi) = log of the Perron root, on the chain of block max(block, memory).
double pressure(const SubshiftSpec& spec, const Potential& phi, int block = 0);

// (1/n) log sum over admissible words w with |w| = n + memory - 1 of
// e^{S_n phi(w)}, computed in log-domain by matrix-vector products.
double finite_pressure(const SubshiftSpec& spec, const Potential& phi, int n);

// Stationary Markov measure on the states of a recoded chain.
struct MarkovMeasure {
  RecodedChain chain;
  Eigen::MatrixXd transition;
  Eigen::VectorXd stationary;
};

// Validates row sums, support and stationarity (tolerance 1e-12 unless
// given). Without `stationary`, solves pi P = pi; throws when the
// stationary vector is not unique.
MarkovMeasure make_markov_measure(const RecodedChain& chain,
                                  Eigen::MatrixXd transition);
MarkovMeasure make_markov_measure(const RecodedChain& chain,
                                  Eigen::MatrixXd transition,
                                  Eigen::VectorXd stationary,
                                  double tol = 1e-12);

// P_{w,w'} = M_{w,w'} h_{w'} / (lambda h_w), pi_w = nu_w h_w.
MarkovMeasure gibbs_measure(const RPFData& rpf, const WeightedMatrix& m);

// Equilibrium state of phi on the chain of the given block.
MarkovMeasure equilibrium_state(const SubshiftSpec& spec, const Potential& phi,
                                int block = 0);

double entropy(const MarkovMeasure& mu);
double integrate(const MarkovMeasure& mu, const Potential& phi);

// P(G) - int G dmu - h_mu. Nonnegative; zero exactly at the Gibbs measure.
double variational_gap(const SubshiftSpec& spec, const Potential& g,
                       const MarkovMeasure& mu);

// Random irreducible Markov measure supported on the allowed transitions.
MarkovMeasure random_markov_measure(const RecodedChain& chain,
                                    CounterStream& rng);

// Invariant Markov measure whose transition marginals are
// s * marginals(a) + (1 - s) * marginals(b). Integrals of potentials of
// memory <= block are affine in s.
MarkovMeasure mix_markov_measures(const MarkovMeasure& a,
                                  const MarkovMeasure& b, double s);

}  // namespace ldplab
