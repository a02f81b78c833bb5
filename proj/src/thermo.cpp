#include "ldplab/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace ldplab {

namespace {

std::vector<int> bfs_levels(const Eigen::MatrixXd& m, bool transpose) {
  const auto n = m.rows();
  std::vector<int> level(static_cast<std::size_t>(n), -1);
  std::deque<Eigen::Index> queue{0};
  level[0] = 0;
  while (!queue.empty()) {
    const auto u = queue.front();
    queue.pop_front();
    for (Eigen::Index v = 0; v < n; ++v) {
      const double e = transpose ? m(v, u) : m(u, v);
      if (e > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
        level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
        queue.push_back(v);
      }
    }
  }
  return level;
}

// Iterates x <- op(x) / |op(x)|_inf until the relative eigen-residual is
// below tol. Near-periodic matrices (second eigenvalue close to -rho) stall
// plain iteration, so after a fixed number of plain steps it switches to
// op + sigma I with sigma an estimate of rho.
template <class Apply>
Eigen::VectorXd perron_vector(const Apply& apply, Eigen::Index n,
                              const SolverOptions& options, long& iterations) {
  constexpr long kPlainSteps = 2000;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double sigma = 0.0;
  double previous = 0.0;
  for (long it = 1; it <= options.max_iter; ++it) {
    Eigen::VectorXd y = apply(x);
    const double plain = y.maxCoeff();
    if (it == kPlainSteps + 1) sigma = std::sqrt(previous * plain);
    previous = plain;
    y += sigma * x;
    const double lambda = y.maxCoeff();
    const double unshifted = lambda - sigma;
    x = y / lambda;
    if (unshifted <= 0.0) continue;
    const Eigen::VectorXd r = apply(x) - unshifted * x;
    const double residual = r.lpNorm<Eigen::Infinity>() / unshifted;
    if (residual <= options.tol) {
      iterations = std::max(iterations, it);
      return x;
    }
  }
  throw Error(ErrorKind::NoConvergence,
              "power iteration did not converge in " +
                  std::to_string(options.max_iter) + " iterations");
}

void check_stochastic(const RecodedChain& chain, const Eigen::MatrixXd& p,
                      double tol) {
  if (p.rows() != chain.size() || p.cols() != chain.size()) {
    throw Error(ErrorKind::InvalidArgument,
                "transition matrix does not match the chain");
  }
  for (int i = 0; i < chain.size(); ++i) {
    double row = 0.0;
    for (int j = 0; j < chain.size(); ++j) {
      const double v = p(i, j);
      if (!(v >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument,
                    "transition probabilities must be nonnegative");
      }
      if (v > 0.0 && !chain.adjacent(i, j)) {
        throw Error(ErrorKind::IncompatibleSupport,
                    "transition " + format_word(chain.state(i)) + " -> " +
                        format_word(chain.state(j)) + " is not allowed");
      }
      row += v;
    }
    if (std::abs(row - 1.0) > tol) {
      throw Error(ErrorKind::InvalidArgument,
                  "transition row " + format_word(chain.state(i)) +
                      " does not sum to 1");
    }
  }
}

}  // namespace

RecodedChain::RecodedChain(SubshiftSpec base, int block)
    : base_(std::move(base)), block_(block) {
  if (block_ < 1) throw Error(ErrorKind::InvalidArgument, "block must be >= 1");
  states_ = admissible_words(base_, block_);
  for (int i = 0; i < size(); ++i) index_[states_[static_cast<std::size_t>(i)]] = i;
  successors_.resize(states_.size());
  adjacency_ = Eigen::MatrixXd::Zero(size(), size());
  for (int i = 0; i < size(); ++i) {
    for (Symbol s : base_.successors(states_[static_cast<std::size_t>(i)].back())) {
      const int j = step(i, s);
      successors_[static_cast<std::size_t>(i)].push_back(j);
      adjacency_(i, j) = 1.0;
    }
    std::sort(successors_[static_cast<std::size_t>(i)].begin(),
              successors_[static_cast<std::size_t>(i)].end());
  }
}

int RecodedChain::index_of(const Word& w) const {
  const auto it = index_.find(w);
  return it == index_.end() ? -1 : it->second;
}

int RecodedChain::step(int from, Symbol next) const {
  const Word& w = state(from);
  if (!base_.valid_symbol(next) || !base_.allowed(w.back(), next)) return -1;
  Word target(w.begin() + 1, w.end());
  target.push_back(next);
  return index_of(target);
}

RecodedChain recode(const SubshiftSpec& spec, int block) {
  return RecodedChain(spec, block);
}

Eigen::VectorXd state_values(const RecodedChain& chain, const Potential& phi) {
  if (phi.memory() > chain.block()) {
    throw Error(ErrorKind::MemoryTooLarge,
                "potential memory exceeds the recoding block");
  }
  Eigen::VectorXd values(chain.size());
  for (int i = 0; i < chain.size(); ++i) values(i) = phi(chain.state(i));
  return values;
}

WeightedMatrix transfer_matrix(const RecodedChain& chain, const Potential& phi) {
  const Eigen::VectorXd values = state_values(chain, phi);
  WeightedMatrix m;
  m.chain = chain;
  const double top = values.maxCoeff();
  m.log_scale = std::abs(top) > 300.0 ? top : 0.0;
  m.entries = Eigen::MatrixXd::Zero(chain.size(), chain.size());
  for (int i = 0; i < chain.size(); ++i) {
    const double weight = std::exp(values(i) - m.log_scale);
    for (int j : chain.successors(i)) m.entries(i, j) = weight;
  }
  return m;
}

bool is_primitive(const Eigen::MatrixXd& m) {
  const auto n = m.rows();
  if (n == 0 || m.cols() != n) return false;
  const auto forward = bfs_levels(m, false);
  const auto backward = bfs_levels(m, true);
  const auto unreached = [](int level) { return level < 0; };
  if (std::any_of(forward.begin(), forward.end(), unreached) ||
      std::any_of(backward.begin(), backward.end(), unreached)) {
    return false;
  }
  // Period of an irreducible graph: gcd of level[u] + 1 - level[v] over edges.
  int period = 0;
  for (Eigen::Index u = 0; u < n; ++u) {
    for (Eigen::Index v = 0; v < n; ++v) {
      if (m(u, v) > 0.0) {
        period = std::gcd(period, std::abs(forward[static_cast<std::size_t>(u)] + 1 -
                                           forward[static_cast<std::size_t>(v)]));
      }
    }
  }
  return period == 1;
}

RPFData rpf_solve(const WeightedMatrix& m, const SolverOptions& options) {
  if (!(options.tol > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "tolerance must be positive");
  }
  if (!is_primitive(m.entries)) {
    throw Error(ErrorKind::NotPrimitive, "transfer matrix is not primitive");
  }
  const Eigen::Index n = m.entries.rows();
  RPFData rpf;
  const Eigen::MatrixXd mt = m.entries.transpose();
  rpf.right = perron_vector([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m.entries * x; },
                            n, options, rpf.iterations);
  rpf.left = perron_vector([&](const Eigen::VectorXd& x) -> Eigen::VectorXd { return mt * x; }, n,
                           options, rpf.iterations);
  rpf.left /= rpf.left.sum();
  rpf.right /= rpf.left.dot(rpf.right);
  rpf.eigenvalue = rpf.left.dot(m.entries * rpf.right);
  rpf.log_eigenvalue = std::log(rpf.eigenvalue) + m.log_scale;
  const double right_residual =
      (m.entries * rpf.right - rpf.eigenvalue * rpf.right).lpNorm<Eigen::Infinity>();
  const double left_residual =
      (mt * rpf.left - rpf.eigenvalue * rpf.left).lpNorm<Eigen::Infinity>();
  rpf.residual = std::max(right_residual, left_residual) / rpf.eigenvalue;
  return rpf;
}

double pressure(const SubshiftSpec& spec, const Potential& phi, int block) {
  const int k = std::max(block, phi.memory());
  return rpf_solve(transfer_matrix(recode(spec, k), phi)).log_eigenvalue;
}

double finite_pressure(const SubshiftSpec& spec, const Potential& phi, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  const RecodedChain chain = recode(spec, phi.memory());
  const Eigen::VectorXd values = state_values(chain, phi);
  // x_j = log-scaled sum over paths starting at j of prod e^{phi}.
  double log_total = 0.0;
  Eigen::VectorXd x = values.array().exp();
  for (int step = 1; step < n; ++step) {
    Eigen::VectorXd y = Eigen::VectorXd::Zero(chain.size());
    for (int i = 0; i < chain.size(); ++i) {
      double acc = 0.0;
      for (int j : chain.successors(i)) acc += x(j);
      y(i) = std::exp(values(i)) * acc;
    }
    const double scale = y.maxCoeff();
    log_total += std::log(scale);
    x = y / scale;
  }
  return (log_total + std::log(x.sum())) / n;
}

MarkovMeasure make_markov_measure(const RecodedChain& chain,
                                  Eigen::MatrixXd transition) {
  check_stochastic(chain, transition, 1e-12);
  const int n = chain.size();
  Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(0).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.rank() < n) {
    throw Error(ErrorKind::InvalidArgument,
                "stationary distribution is not unique; supply it explicitly");
  }
  Eigen::VectorXd pi = lu.solve(b);
  pi = pi.cwiseMax(0.0);
  pi /= pi.sum();
  return make_markov_measure(chain, std::move(transition), std::move(pi));
}

MarkovMeasure make_markov_measure(const RecodedChain& chain,
                                  Eigen::MatrixXd transition,
                                  Eigen::VectorXd stationary, double tol) {
  check_stochastic(chain, transition, tol);
  if (stationary.size() != chain.size() || (stationary.array() < 0.0).any() ||
      std::abs(stationary.sum() - 1.0) > tol) {
    throw Error(ErrorKind::InvalidArgument,
                "stationary vector must be a probability vector on the states");
  }
  const Eigen::VectorXd drift = transition.transpose() * stationary - stationary;
  if (drift.lpNorm<Eigen::Infinity>() > tol) {
    throw Error(ErrorKind::InvalidArgument, "vector is not stationary");
  }
  return MarkovMeasure{chain, std::move(transition), std::move(stationary)};
}

MarkovMeasure gibbs_measure(const RPFData& rpf, const WeightedMatrix& m) {
  const int n = m.chain.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j : m.chain.successors(i)) {
      p(i, j) = m.entries(i, j) * rpf.right(j) / (rpf.eigenvalue * rpf.right(i));
    }
    p.row(i) /= p.row(i).sum();
  }
  Eigen::VectorXd pi = rpf.left.cwiseProduct(rpf.right);
  pi /= pi.sum();
  return make_markov_measure(m.chain, std::move(p), std::move(pi), 1e-10);
}

MarkovMeasure equilibrium_state(const SubshiftSpec& spec, const Potential& phi,
                                int block) {
  const WeightedMatrix m =
      transfer_matrix(recode(spec, std::max(block, phi.memory())), phi);
  return gibbs_measure(rpf_solve(m), m);
}

double entropy(const MarkovMeasure& mu) {
  double h = 0.0;
  for (int i = 0; i < mu.chain.size(); ++i) {
    double row = 0.0;
    for (int j : mu.chain.successors(i)) {
      const double p = mu.transition(i, j);
      if (p > 0.0) row -= p * std::log(p);
    }
    h += mu.stationary(i) * row;
  }
  return std::max(h, 0.0);
}

double integrate(const MarkovMeasure& mu, const Potential& phi) {
  return mu.stationary.dot(state_values(mu.chain, phi));
}

double variational_gap(const SubshiftSpec& spec, const Potential& g,
                       const MarkovMeasure& mu) {
  return pressure(spec, g, mu.chain.block()) - integrate(mu, g) - entropy(mu);
}

MarkovMeasure random_markov_measure(const RecodedChain& chain,
                                    CounterStream& rng) {
  const int n = chain.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  // Cubing uniforms spreads rows from near-uniform to near-deterministic.
  for (int i = 0; i < n; ++i) {
    for (int j : chain.successors(i)) {
      const double u = 1e-3 + rng.next_double();
      p(i, j) = u * u * u;
    }
    p.row(i) /= p.row(i).sum();
  }
  return make_markov_measure(chain, std::move(p));
}

MarkovMeasure mix_markov_measures(const MarkovMeasure& a,
                                  const MarkovMeasure& b, double s) {
  if (!(a.chain.base() == b.chain.base()) || a.chain.block() != b.chain.block()) {
    throw Error(ErrorKind::InvalidArgument, "measures live on different chains");
  }
  if (!(s >= 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "mixing weight must lie in [0, 1]");
  }
  const int n = a.chain.size();
  const Eigen::MatrixXd flow =
      s * (a.stationary.asDiagonal() * a.transition) +
      (1.0 - s) * (b.stationary.asDiagonal() * b.transition);
  Eigen::VectorXd pi = flow.rowwise().sum();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (pi(i) > 0.0) {
      p.row(i) = flow.row(i) / pi(i);
      p.row(i) /= p.row(i).sum();
    } else {
      const auto& next = a.chain.successors(i);
      for (int j : next) p(i, j) = 1.0 / static_cast<double>(next.size());
    }
  }
  pi /= pi.sum();
  return make_markov_measure(a.chain, std::move(p), std::move(pi), 1e-10);
}

}  // namespace ldplab
