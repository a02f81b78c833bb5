#include "ldplab/leaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ldplab {

LeafMeasure leaf_measure(const SubshiftSpec& spec, const Potential& g,
                         const Word& past, int block) {
  const int k = std::max(block, g.memory());
  if (past.empty() || !spec.admissible(past)) {
    throw Error(ErrorKind::InadmissiblePast, "leaf past is not admissible");
  }
  if (static_cast<int>(past.size()) < k) {
    throw Error(ErrorKind::InadmissiblePast,
                "leaf past must contain at least " + std::to_string(k) +
                    " symbols");
  }
  LeafMeasure leaf;
  leaf.potential = lift(spec, g, k);
  const WeightedMatrix m = transfer_matrix(recode(spec, k), leaf.potential);
  const RPFData rpf = rpf_solve(m);
  leaf.gibbs = gibbs_measure(rpf, m);
  leaf.pressure = rpf.log_eigenvalue;
  leaf.past = past;
  leaf.start_state =
      leaf.gibbs.chain.index_of(Word(past.end() - k, past.end()));
  return leaf;
}

LeafMeasure with_block(const LeafMeasure& leaf, int block) {
  if (block <= leaf.block()) return leaf;
  return leaf_measure(leaf.chain().base(), leaf.potential, leaf.past, block);
}

double cylinder_mass(const LeafMeasure& leaf, const Word& w) {
  if (w.empty() || w.front() != leaf.start_symbol()) {
    throw Error(ErrorKind::InconsistentStart,
                "word must begin with the leaf's coordinate-0 symbol");
  }
  const RecodedChain& chain = leaf.chain();
  double mass = 1.0;
  int state = leaf.start_state;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const int next = chain.step(state, w[i]);
    if (next < 0) {
      throw Error(ErrorKind::InadmissibleWord, "leaf word is not admissible");
    }
    mass *= leaf.gibbs.transition(state, next);
    state = next;
  }
  return mass;
}

double bowen_ball_mass(const LeafMeasure& leaf, const Word& y, int n, int r) {
  if (n < 1 || r < 0) {
    throw Error(ErrorKind::InvalidArgument, "need n >= 1 and r >= 0");
  }
  if (static_cast<int>(y.size()) < n + r) {
    throw Error(ErrorKind::WordTooShort, "Bowen ball needs |y| >= n + r");
  }
  return cylinder_mass(leaf, Word(y.begin(), y.begin() + n + r));
}

double count_leaf_words(const LeafMeasure& leaf, int length) {
  const RecodedChain& chain = leaf.chain();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(chain.size());
  v(leaf.start_state) = 1.0;
  for (int i = 1; i < length; ++i) v = chain.adjacency().transpose() * v;
  return v.sum();
}

GibbsRatioReport gibbs_ratio_audit(const LeafMeasure& leaf, int n_max, int r,
                                   std::int64_t budget) {
  if (n_max < 1 || r < 0) {
    throw Error(ErrorKind::InvalidArgument, "need n_max >= 1 and r >= 0");
  }
  const int k = leaf.block();
  const int tail = std::max(r, k - 1);
  const int max_len = n_max + tail;
  double nodes = 0.0;
  for (int len = 1; len <= max_len; ++len) nodes += count_leaf_words(leaf, len);
  if (nodes > static_cast<double>(budget)) {
    throw Error(ErrorKind::EnumerationTooLarge,
                "audit would enumerate " + std::to_string(nodes) +
                    " words, above the budget of " + std::to_string(budget));
  }

  const RecodedChain& chain = leaf.chain();
  const Eigen::VectorXd g = state_values(chain, leaf.potential);
  const Eigen::MatrixXd log_p = leaf.gibbs.transition.array().log();

  GibbsRatioReport report;
  report.r = r;
  report.n_max = n_max;
  report.k_min = report.half_k_min = std::numeric_limits<double>::infinity();
  report.k_max = report.half_k_max = 0.0;

  // Along the current path (index = word length - 1): state, log cylinder
  // mass, and sum of G over the complete forward windows.
  const auto len_cap = static_cast<std::size_t>(max_len);
  std::vector<int> state(len_cap);
  std::vector<double> log_mass(len_cap);
  std::vector<double> g_sum(len_cap);
  std::vector<std::size_t> next_choice(len_cap, 0);
  Word word(len_cap);

  // Window starting at position i is the chain state at path index i + k - 1.
  const auto visit = [&](std::size_t t) {
    const int len = static_cast<int>(t) + 1;
    const int n = len - tail;
    if (n < 1 || n > n_max) return;
    const double lm = log_mass[static_cast<std::size_t>(n + r - 1)];
    const double sg = g_sum[static_cast<std::size_t>(n + k - 2)];
    const double ratio = std::exp(lm - sg + n * leaf.pressure);
    ++report.words;
    if (ratio < report.k_min) {
      report.k_min = ratio;
      report.argmin.assign(word.begin(), word.begin() + len);
      report.argmin_n = n;
    }
    if (ratio > report.k_max) {
      report.k_max = ratio;
      report.argmax.assign(word.begin(), word.begin() + len);
      report.argmax_n = n;
    }
    if (2 * n <= n_max) {
      report.half_k_min = std::min(report.half_k_min, ratio);
      report.half_k_max = std::max(report.half_k_max, ratio);
    }
  };

  state[0] = leaf.start_state;
  log_mass[0] = 0.0;
  g_sum[0] = k == 1 ? g(leaf.start_state) : 0.0;
  word[0] = leaf.start_symbol();
  visit(0);
  std::size_t t = 0;
  next_choice[0] = 0;
  while (true) {
    const auto& succ = chain.successors(state[t]);
    if (t + 1 == len_cap || next_choice[t] == succ.size()) {
      if (t == 0) break;
      --t;
      continue;
    }
    const int s = succ[next_choice[t]++];
    const std::size_t u = t + 1;
    state[u] = s;
    word[u] = chain.state(s).back();
    log_mass[u] = log_mass[t] + log_p(state[t], s);
    g_sum[u] = g_sum[t] + (static_cast<int>(u) >= k - 1 ? g(s) : 0.0);
    next_choice[u] = 0;
    t = u;
    visit(t);
  }

  if (n_max >= 2) {
    report.drift = std::max((report.half_k_min - report.k_min) / report.k_min,
                            (report.k_max - report.half_k_max) / report.half_k_max);
  }
  return report;
}

PathSampler::PathSampler(const MarkovMeasure& mu) {
  const int n = mu.chain.size();
  cumulative_.resize(static_cast<std::size_t>(n));
  targets_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j : mu.chain.successors(i)) {
      const double p = mu.transition(i, j);
      if (p <= 0.0) continue;
      acc += p;
      cumulative_[static_cast<std::size_t>(i)].push_back(acc);
      targets_[static_cast<std::size_t>(i)].push_back(j);
    }
  }
}

int PathSampler::next(int state, double u) const {
  const auto& cdf = cumulative_[static_cast<std::size_t>(state)];
  const auto& to = targets_[static_cast<std::size_t>(state)];
  // Scale by the row total so rounding in the last partial sum never
  // leaves a gap at the top of [0, 1).
  const double x = u * cdf.back();
  const auto it = std::upper_bound(cdf.begin(), cdf.end(), x);
  const auto pos = std::min<std::size_t>(
      static_cast<std::size_t>(it - cdf.begin()), to.size() - 1);
  return to[pos];
}

Word sample_path(const LeafMeasure& leaf, int n, std::uint64_t seed,
                 std::uint64_t index) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "path length must be >= 1");
  const PathSampler sampler(leaf.gibbs);
  CounterStream rng(seed, index);
  Word w{leaf.start_symbol()};
  int state = leaf.start_state;
  for (int i = 1; i < n; ++i) {
    state = sampler.next(state, rng.next_double());
    w.push_back(leaf.chain().state(state).back());
  }
  return w;
}

}  // namespace ldplab
