#include "ldplab/ldp.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

namespace ldplab {

namespace {

int common_block(const Potential& a, const Potential& b) {
  return std::max(a.memory(), b.memory());
}

// Largest |t| for which e^{G + t phi} stays representable after scaling.
double tilt_cap(const SubshiftSpec& spec, const Potential& g,
                const Potential& phi) {
  const RecodedChain chain = recode(spec, common_block(g, phi));
  const Eigen::VectorXd gv = state_values(chain, g);
  const Eigen::VectorXd pv = state_values(chain, phi);
  const double span_phi = pv.maxCoeff() - pv.minCoeff();
  const double span_g = gv.maxCoeff() - gv.minCoeff();
  if (span_phi <= 0.0) return kInfinity;
  return std::max(1.0, (600.0 - span_g) / span_phi);
}

double karp_min_mean(const RecodedChain& chain, const Eigen::VectorXd& w) {
  const int n = chain.size();
  const double inf = kInfinity;
  // d[k][v]: minimum weight of a k-edge walk ending at v from any start.
  std::vector<std::vector<double>> d(static_cast<std::size_t>(n + 1),
                                     std::vector<double>(static_cast<std::size_t>(n), inf));
  std::fill(d[0].begin(), d[0].end(), 0.0);
  for (int k = 1; k <= n; ++k) {
    auto& cur = d[static_cast<std::size_t>(k)];
    const auto& prev = d[static_cast<std::size_t>(k - 1)];
    for (int u = 0; u < n; ++u) {
      if (prev[static_cast<std::size_t>(u)] == inf) continue;
      const double via = prev[static_cast<std::size_t>(u)] + w(u);
      for (int v : chain.successors(u)) {
        cur[static_cast<std::size_t>(v)] = std::min(cur[static_cast<std::size_t>(v)], via);
      }
    }
  }
  double best = inf;
  for (int v = 0; v < n; ++v) {
    const double dn = d[static_cast<std::size_t>(n)][static_cast<std::size_t>(v)];
    if (dn == inf) continue;
    double worst = -inf;
    for (int k = 0; k < n; ++k) {
      const double dk = d[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)];
      if (dk == inf) continue;
      worst = std::max(worst, (dn - dk) / (n - k));
    }
    best = std::min(best, worst);
  }
  return best;
}

bool below_upper(const Interval& l, double sum, double n, double eps) {
  const double bound = l.hi * n;
  return l.hi_closed ? sum <= bound + eps : sum < bound - eps;
}

bool above_lower(const Interval& l, double sum, double n, double eps) {
  const double bound = l.lo * n;
  return l.lo_closed ? sum >= bound - eps : sum > bound + eps;
}

double sum_tolerance(const Interval& l, double n) {
  return 1e-9 * std::max({1.0, std::abs(l.lo * n), std::abs(l.hi * n)});
}

// Weighted per-state table for phi on the leaf's chain.
struct LeafSetup {
  LeafMeasure leaf;
  Eigen::VectorXd phi;
  int steps = 0;  // transitions in a path covering windows 1 .. n
};

LeafSetup setup(const LeafMeasure& leaf, const Potential& phi, int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "n must be >= 1");
  LeafSetup s;
  s.leaf = with_block(leaf, phi.memory());
  s.phi = state_values(s.leaf.chain(), lift(s.leaf.chain().base(), phi,
                                            s.leaf.block()));
  s.steps = n + s.leaf.block() - 1;
  return s;
}

DeviationPoint finish(DeviationPoint p) {
  p.log_mass = p.mass > 0.0 ? std::log(p.mass) : -kInfinity;
  return p;
}

DeviationPoint enumerate_mass(const LeafSetup& s, const Interval& l, int n) {
  const RecodedChain& chain = s.leaf.chain();
  const int k = s.leaf.block();
  const auto depth = static_cast<std::size_t>(s.steps);
  const double eps = sum_tolerance(l, n);
  std::vector<int> state(depth + 1);
  std::vector<double> mass(depth + 1);
  std::vector<double> sum(depth + 1);
  std::vector<std::size_t> choice(depth + 1, 0);
  state[0] = s.leaf.start_state;
  mass[0] = 1.0;
  sum[0] = 0.0;
  double total = 0.0;
  std::size_t t = 0;
  while (true) {
    if (t == depth) {
      if (above_lower(l, sum[t], n, eps) && below_upper(l, sum[t], n, eps)) {
        total += mass[t];
      }
      --t;
      continue;
    }
    const auto& succ = chain.successors(state[t]);
    if (choice[t] == succ.size()) {
      if (t == 0) break;
      --t;
      continue;
    }
    const int next = succ[choice[t]++];
    const std::size_t u = t + 1;
    state[u] = next;
    mass[u] = mass[t] * s.leaf.gibbs.transition(state[t], next);
    sum[u] = sum[t] + (static_cast<int>(u) >= k ? s.phi(next) : 0.0);
    choice[u] = 0;
    t = u;
  }
  DeviationPoint p;
  p.n = n;
  p.method = DeviationMethod::ExactEnumeration;
  p.mass = p.mass_lower = p.mass_upper = std::min(total, 1.0);
  return finish(p);
}

// Distribution of sum_j level(s_j) over the weighted steps, per final state.
// Returns mass per total level.
std::vector<double> level_distribution(const LeafSetup& s,
                                       const std::vector<std::int64_t>& level,
                                       std::int64_t max_level,
                                       std::int64_t budget) {
  const RecodedChain& chain = s.leaf.chain();
  const int n_states = chain.size();
  const int k = s.leaf.block();
  const int weighted = s.steps - k + 1;
  const std::int64_t width = max_level * weighted + 1;
  if (static_cast<double>(width) * n_states * s.steps > static_cast<double>(budget)) {
    throw Error(ErrorKind::BudgetExceeded,
                "dynamic program exceeds the enumeration budget");
  }
  const auto w = static_cast<std::size_t>(width);
  std::vector<double> cur(static_cast<std::size_t>(n_states) * w, 0.0);
  std::vector<double> nxt(cur.size(), 0.0);
  cur[static_cast<std::size_t>(s.leaf.start_state) * w] = 1.0;
  std::int64_t reach = 0;  // highest level with nonzero mass so far
  for (int t = 1; t <= s.steps; ++t) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    const bool weigh = t >= k;
    std::int64_t new_reach = reach;
    for (int i = 0; i < n_states; ++i) {
      const double* src = &cur[static_cast<std::size_t>(i) * w];
      for (int j : chain.successors(i)) {
        const double p = s.leaf.gibbs.transition(i, j);
        if (p == 0.0) continue;
        const std::int64_t shift = weigh ? level[static_cast<std::size_t>(j)] : 0;
        double* dst = &nxt[static_cast<std::size_t>(j) * w];
        for (std::int64_t v = 0; v <= reach; ++v) {
          const double m = src[v];
          if (m != 0.0) dst[v + shift] += m * p;
        }
        new_reach = std::max(new_reach, reach + shift);
      }
    }
    reach = new_reach;
    std::swap(cur, nxt);
  }
  std::vector<double> out(w, 0.0);
  for (int i = 0; i < n_states; ++i) {
    for (std::size_t v = 0; v < w; ++v) out[v] += cur[static_cast<std::size_t>(i) * w + v];
  }
  return out;
}

DeviationPoint lattice_mass(const LeafSetup& s, const Lattice& lattice,
                            const Interval& l, int n, std::int64_t budget) {
  const auto& num = lattice.numerators;
  const std::int64_t base = *std::min_element(num.begin(), num.end());
  std::int64_t g = 0;
  for (std::int64_t v : num) g = std::gcd(g, v - base);
  std::vector<std::int64_t> level(num.size());
  std::int64_t max_level = 0;
  for (std::size_t i = 0; i < num.size(); ++i) {
    level[i] = g == 0 ? 0 : (num[i] - base) / g;
    max_level = std::max(max_level, level[i]);
  }
  const auto dist = level_distribution(s, level, max_level, budget);
  // S_n phi = (n * base + g * J) / denominator; compare in numerator units.
  const double scale = static_cast<double>(lattice.denominator);
  const double eps = 1e-6;
  double total = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist[j] == 0.0) continue;
    const double numerator = static_cast<double>(n) * static_cast<double>(base) +
                             static_cast<double>(g) * static_cast<double>(j);
    const double lo = l.lo * n * scale;
    const double hi = l.hi * n * scale;
    const bool above = l.lo_closed ? numerator >= lo - eps : numerator > lo + eps;
    const bool below = l.hi_closed ? numerator <= hi + eps : numerator < hi - eps;
    if (above && below) total += dist[j];
  }
  DeviationPoint p;
  p.n = n;
  p.method = DeviationMethod::DpLattice;
  p.mass = p.mass_lower = p.mass_upper = std::min(total, 1.0);
  return finish(p);
}

DeviationPoint binned_mass(const LeafSetup& s, const Interval& l, int n,
                           double bin_width, std::int64_t budget) {
  if (!(bin_width > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "bin width must be positive");
  }
  const auto count = static_cast<std::size_t>(s.phi.size());
  std::vector<std::int64_t> floor_index(count);
  double e_min = kInfinity;
  double e_max = -kInfinity;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = s.phi(static_cast<Eigen::Index>(i));
    floor_index[i] = static_cast<std::int64_t>(std::floor(v / bin_width));
    const double e = v - static_cast<double>(floor_index[i]) * bin_width;
    e_min = std::min(e_min, e);
    e_max = std::max(e_max, e);
  }
  const std::int64_t base = *std::min_element(floor_index.begin(), floor_index.end());
  std::vector<std::int64_t> level(count);
  std::int64_t max_level = 0;
  std::int64_t stride = 0;
  for (std::size_t i = 0; i < count; ++i) {
    level[i] = floor_index[i] - base;
    stride = std::gcd(stride, level[i]);
  }
  if (stride == 0) stride = 1;
  for (auto& v : level) {
    v /= stride;
    max_level = std::max(max_level, v);
  }
  const auto dist = level_distribution(s, level, max_level, budget);
  const double eps = sum_tolerance(l, n);
  double lower = 0.0;
  double upper = 0.0;
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist[j] == 0.0) continue;
    const double floor_sum =
        bin_width * (static_cast<double>(n) * static_cast<double>(base) +
                     static_cast<double>(j) * static_cast<double>(stride));
    const double sum_lo = floor_sum + n * e_min;
    const double sum_hi = floor_sum + n * e_max;
    if (above_lower(l, sum_lo, n, -eps) && below_upper(l, sum_hi, n, -eps)) {
      lower += dist[j];
    }
    if (above_lower(l, sum_hi, n, eps) && below_upper(l, sum_lo, n, eps)) {
      upper += dist[j];
    }
  }
  DeviationPoint p;
  p.n = n;
  p.method = DeviationMethod::DpBinned;
  p.bin_width = bin_width;
  p.mass_lower = std::min(lower, 1.0);
  p.mass_upper = std::min(upper, 1.0);
  p.mass = 0.5 * (p.mass_lower + p.mass_upper);
  return finish(p);
}

// Chan et al. pairwise combination of (count, mean, M2) partial moments.
struct Moments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    count += 1.0;
    const double delta = x - mean;
    mean += delta / count;
    m2 += delta * (x - mean);
  }
  void merge(const Moments& o) {
    if (o.count == 0.0) return;
    const double total = count + o.count;
    const double delta = o.mean - mean;
    mean += delta * o.count / total;
    m2 += o.m2 + delta * delta * count * o.count / total;
    count = total;
  }
};

}  // namespace

ErgodicRange ergodic_range(const SubshiftSpec& spec, const Potential& phi) {
  const RecodedChain chain = recode(spec, phi.memory());
  const Eigen::VectorXd w = state_values(chain, phi);
  return {karp_min_mean(chain, w), -karp_min_mean(chain, -w)};
}

TiltedState tilted_state(const SubshiftSpec& spec, const Potential& g,
                         const Potential& phi, double t) {
  const int k = common_block(g, phi);
  const double p_g = pressure(spec, g, k);
  const Potential psi = combine(spec, 1.0, g, t, phi);
  const WeightedMatrix m = transfer_matrix(recode(spec, k), psi);
  const RPFData rpf = rpf_solve(m);
  TiltedState s;
  s.t = t;
  s.q = rpf.log_eigenvalue - p_g;
  s.measure = gibbs_measure(rpf, m);
  s.dq = integrate(s.measure, lift(spec, phi, k));
  return s;
}

double q_value(const SubshiftSpec& spec, const Potential& g,
               const Potential& phi, double t) {
  if (t == 0.0) return 0.0;
  const int k = common_block(g, phi);
  return pressure(spec, combine(spec, 1.0, g, t, phi), k) - pressure(spec, g, k);
}

double q_derivative(const SubshiftSpec& spec, const Potential& g,
                    const Potential& phi, double t) {
  return tilted_state(spec, g, phi, t).dq;
}

RateValue rate_scalar(const SubshiftSpec& spec, const Potential& g,
                      const Potential& phi, double alpha,
                      const RateOptions& options) {
  const ErgodicRange range = ergodic_range(spec, phi);
  const double scale = std::max({1.0, std::abs(range.min), std::abs(range.max)});
  const double edge = 1e-12 * scale;
  RateValue out;
  out.alpha = alpha;
  if (alpha < range.min - edge || alpha > range.max + edge) {
    out.rate = kInfinity;
    out.tilt = alpha < range.min ? -kInfinity : kInfinity;
    return out;
  }
  if (range.max - range.min <= edge) {
    // phi has a single invariant mean, attained by mu_G itself.
    out.boundary = true;
    return out;
  }

  const double cap = tilt_cap(spec, g, phi);
  const auto value_at = [&](double t) {
    return t * alpha - q_value(spec, g, phi, t);
  };

  const bool at_min = std::abs(alpha - range.min) <= edge;
  const bool at_max = std::abs(alpha - range.max) <= edge;
  if (at_min || at_max) {
    // Monotone limit of t alpha - Q(t) as t -> +-inf.
    const double sign = at_max ? 1.0 : -1.0;
    double t = sign;
    double value = value_at(t);
    while (std::abs(t) < cap) {
      const double t_next = std::min(std::abs(2.0 * t), cap) * sign;
      const double next = value_at(t_next);
      const bool settled = std::abs(next - value) <= 1e-12 * std::max(1.0, std::abs(next));
      t = t_next;
      value = next;
      if (settled) break;
    }
    out.rate = std::max(value, 0.0);
    out.tilt = t;
    out.boundary = true;
    return out;
  }

  // Bracket q'(lo) <= alpha <= q'(hi).
  double lo = -1.0;
  double hi = 1.0;
  while (q_derivative(spec, g, phi, lo) > alpha) {
    hi = lo;
    lo *= 2.0;
    if (-lo > cap) {
      out.rate = std::max(value_at(-cap), 0.0);
      out.tilt = -cap;
      out.boundary = true;
      return out;
    }
  }
  while (q_derivative(spec, g, phi, hi) < alpha) {
    lo = hi;
    hi *= 2.0;
    if (hi > cap) {
      out.rate = std::max(value_at(cap), 0.0);
      out.tilt = cap;
      out.boundary = true;
      return out;
    }
  }
  TiltedState s = tilted_state(spec, g, phi, 0.5 * (lo + hi));
  for (int it = 0; it < 400; ++it) {
    if (std::abs(s.dq - alpha) <= options.derivative_tol) break;
    if (s.dq < alpha) {
      lo = s.t;
    } else {
      hi = s.t;
    }
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    s = tilted_state(spec, g, phi, mid);
  }
  out.tilt = s.t;
  out.rate = std::max(s.t * alpha - s.q, 0.0);
  return out;
}

RateCurve rate_curve(const SubshiftSpec& spec, const Potential& g,
                     const Potential& phi, const std::vector<double>& alphas) {
  RateCurve curve;
  curve.range = ergodic_range(spec, phi);
  curve.alphas = alphas;
  for (double a : alphas) {
    const RateValue r = rate_scalar(spec, g, phi, a);
    curve.values.push_back(r.rate);
    curve.tilts.push_back(r.tilt);
  }
  return curve;
}

std::vector<double> interior_grid(const ErgodicRange& range, int n) {
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) {
    out.push_back(range.min + (range.max - range.min) * i / (n + 1));
  }
  return out;
}

double legendre_conjugate(const RateCurve& curve, double t,
                          const std::function<double(double)>& refine) {
  double best = -kInfinity;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < curve.alphas.size(); ++i) {
    if (!std::isfinite(curve.values[i])) continue;
    const double v = t * curve.alphas[i] - curve.values[i];
    if (v > best) {
      best = v;
      arg = i;
    }
  }
  if (!refine || curve.alphas.empty()) return best;
  double a = curve.alphas[arg == 0 ? 0 : arg - 1];
  double b = curve.alphas[std::min(arg + 1, curve.alphas.size() - 1)];
  const auto f = [&](double x) { return t * x - refine(x); };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

double rate_measure(const SubshiftSpec& spec, const Potential& g,
                    const MarkovMeasure& nu) {
  if (!(nu.chain.base() == spec)) {
    throw Error(ErrorKind::IncompatibleSupport,
                "measure is defined on a different subshift");
  }
  for (int i = 0; i < nu.chain.size(); ++i) {
    for (int j = 0; j < nu.chain.size(); ++j) {
      if (nu.transition(i, j) > 0.0 && !nu.chain.adjacent(i, j)) {
        throw Error(ErrorKind::IncompatibleSupport,
                    "measure charges a forbidden transition");
      }
    }
  }
  return variational_gap(spec, g, nu);
}

ContractionReport contraction_check(const SubshiftSpec& spec,
                                    const Potential& g, const Potential& phi,
                                    double alpha, int samples,
                                    std::uint64_t seed) {
  const ErgodicRange range = ergodic_range(spec, phi);
  if (!(alpha > range.min && alpha < range.max)) {
    throw Error(ErrorKind::InvalidArgument,
                "alpha must lie in the open ergodic range");
  }
  const int k = common_block(g, phi);
  const Potential phi_k = lift(spec, phi, k);
  ContractionReport report;
  report.alpha = alpha;
  report.samples = samples;
  const RateValue target = rate_scalar(spec, g, phi, alpha);
  report.scalar_rate = target.rate;
  report.tilt = target.tilt;
  const MarkovMeasure tilted = tilted_state(spec, g, phi, target.tilt).measure;
  report.rate_at_tilted = rate_measure(spec, g, tilted);

  // Companions on either side of alpha pull random measures onto the
  // constraint surface int phi = alpha.
  const MarkovMeasure below =
      tilted_state(spec, g, phi,
                   rate_scalar(spec, g, phi, 0.5 * (alpha + range.min)).tilt)
          .measure;
  const MarkovMeasure above =
      tilted_state(spec, g, phi,
                   rate_scalar(spec, g, phi, 0.5 * (alpha + range.max)).tilt)
          .measure;
  const RecodedChain chain = recode(spec, k);
  for (int i = 0; i < samples; ++i) {
    CounterStream rng(seed, static_cast<std::uint64_t>(i));
    MarkovMeasure nu = random_markov_measure(chain, rng);
    const double beta = integrate(nu, phi_k);
    if (beta != alpha) {
      const MarkovMeasure& companion = beta > alpha ? below : above;
      const double gamma = integrate(companion, phi_k);
      nu = mix_markov_measures(nu, companion, (alpha - gamma) / (beta - gamma));
    }
    nu = mix_markov_measures(nu, tilted, rng.next_double());
    report.max_constraint_error =
        std::max(report.max_constraint_error, std::abs(integrate(nu, phi_k) - alpha));
    const double slack = rate_measure(spec, g, nu) - report.scalar_rate;
    report.min_slack = std::min(report.min_slack, slack);
    if (slack < -1e-8) ++report.violations;
  }
  return report;
}

double growth_estimate(const LeafMeasure& leaf, const Potential& phi, int n) {
  const LeafSetup s = setup(leaf, phi, n);
  const RecodedChain& chain = s.leaf.chain();
  const int k = s.leaf.block();
  const Eigen::VectorXd weight = s.phi.array().exp();
  const Eigen::MatrixXd pt = s.leaf.gibbs.transition.transpose();
  Eigen::VectorXd v = Eigen::VectorXd::Zero(chain.size());
  v(s.leaf.start_state) = 1.0;
  double log_total = 0.0;
  for (int t = 1; t <= s.steps; ++t) {
    v = pt * v;
    if (t >= k) v = v.cwiseProduct(weight);
    const double norm = v.sum();
    log_total += std::log(norm);
    v /= norm;
  }
  return log_total / n;
}

bool Interval::contains(double x) const noexcept {
  const bool above = lo_closed ? x >= lo : x > lo;
  const bool below = hi_closed ? x <= hi : x < hi;
  return above && below;
}

std::string Interval::to_string() const {
  const auto shortest = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  return std::string(lo_closed ? "[" : "(") + shortest(lo) + "," + shortest(hi) +
         (hi_closed ? "]" : ")");
}

Interval parse_interval(const std::string& text) {
  std::string body = text;
  Interval l;
  if (!body.empty() && (body.front() == '[' || body.front() == '(')) {
    l.lo_closed = body.front() == '[';
    body.erase(body.begin());
    if (body.empty() || (body.back() != ']' && body.back() != ')')) {
      throw Error(ErrorKind::InvalidArgument, "unterminated interval " + text);
    }
    l.hi_closed = body.back() == ']';
    body.pop_back();
  }
  const auto sep = body.find_first_of(":,");
  if (sep == std::string::npos) {
    throw Error(ErrorKind::InvalidArgument, "interval needs two endpoints: " + text);
  }
  const auto parse = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad interval endpoint '" + s + "'");
    }
  };
  l.lo = parse(body.substr(0, sep));
  l.hi = parse(body.substr(sep + 1));
  if (l.empty()) throw Error(ErrorKind::EmptyInterval, "interval " + text + " is empty");
  return l;
}

std::string_view to_string(DeviationMethod method) noexcept {
  switch (method) {
    case DeviationMethod::ExactEnumeration: return "exact-enumeration";
    case DeviationMethod::DpLattice: return "dp-lattice";
    case DeviationMethod::DpBinned: return "dp-binned";
    case DeviationMethod::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

std::optional<Lattice> detect_lattice(const std::vector<double>& values) {
  constexpr std::int64_t kMaxDenominator = 1'000'000;
  std::int64_t denominator = 1;
  for (double v : values) {
    if (!std::isfinite(v)) return std::nullopt;
    // Continued-fraction convergents p/q of v.
    const double tol = 1e-13 * std::max(1.0, std::abs(v));
    double x = v;
    std::int64_t p0 = 1, q0 = 0;
    std::int64_t p1 = static_cast<std::int64_t>(std::floor(x)), q1 = 1;
    double frac = x - std::floor(x);
    while (std::abs(v - static_cast<double>(p1) / static_cast<double>(q1)) > tol) {
      if (frac < 1e-15) return std::nullopt;
      x = 1.0 / frac;
      const auto a = static_cast<std::int64_t>(std::floor(x));
      frac = x - std::floor(x);
      const std::int64_t p2 = a * p1 + p0;
      const std::int64_t q2 = a * q1 + q0;
      if (q2 > kMaxDenominator) return std::nullopt;
      p0 = p1; q0 = q1; p1 = p2; q1 = q2;
    }
    denominator = std::lcm(denominator, q1);
    if (denominator > kMaxDenominator) return std::nullopt;
  }
  Lattice lattice;
  lattice.denominator = denominator;
  for (double v : values) {
    const double scaled = v * static_cast<double>(denominator);
    if (std::abs(scaled) > 1e15) return std::nullopt;
    lattice.numerators.push_back(static_cast<std::int64_t>(std::llround(scaled)));
  }
  return lattice;
}

DeviationPoint deviation_mass_exact(const LeafMeasure& leaf,
                                    const Potential& phi, const Interval& l,
                                    int n, const ExactOptions& options) {
  if (l.empty()) throw Error(ErrorKind::EmptyInterval, "interval is empty");
  const LeafSetup s = setup(leaf, phi, n);
  std::vector<double> values(s.phi.data(), s.phi.data() + s.phi.size());
  const auto lattice = detect_lattice(values);
  const double paths = count_leaf_words(s.leaf, s.steps + 1);
  const bool enumerable =
      paths * static_cast<double>(s.steps) <= static_cast<double>(options.budget);
  switch (options.mode) {
    case ExactMode::Enumerate:
      if (!enumerable) {
        throw Error(ErrorKind::BudgetExceeded,
                    "enumeration of " + std::to_string(paths) +
                        " leaf words exceeds the budget");
      }
      return enumerate_mass(s, l, n);
    case ExactMode::Dp:
      return lattice ? lattice_mass(s, *lattice, l, n, options.budget)
                     : binned_mass(s, l, n, options.bin_width, options.budget);
    case ExactMode::Auto:
      break;
  }
  if (lattice) return lattice_mass(s, *lattice, l, n, options.budget);
  if (enumerable) return enumerate_mass(s, l, n);
  return binned_mass(s, l, n, options.bin_width, options.budget);
}

DeviationSeries deviation_series_exact(const LeafMeasure& leaf,
                                       const Potential& phi,
                                       const Interval& l,
                                       const std::vector<int>& lengths,
                                       const ExactOptions& options) {
  DeviationSeries series;
  series.interval = l;
  for (int n : lengths) {
    series.points.push_back(deviation_mass_exact(leaf, phi, l, n, options));
  }
  return series;
}

DeviationPoint deviation_mass_mc(const LeafMeasure& leaf, const Potential& phi,
                                 const Interval& l, int n,
                                 const McOptions& options) {
  if (options.samples < 1) {
    throw Error(ErrorKind::InvalidArgument, "need at least one sample");
  }
  if (l.empty()) throw Error(ErrorKind::EmptyInterval, "interval is empty");
  const LeafSetup s = setup(leaf, phi, n);
  const SubshiftSpec& spec = s.leaf.chain().base();
  const int k = s.leaf.block();
  const double tilt = options.tilt.value_or(0.0);
  const LeafMeasure proposal =
      tilt == 0.0 ? s.leaf
                  : leaf_measure(spec,
                                 combine(spec, 1.0, s.leaf.potential, tilt,
                                         lift(spec, phi, k)),
                                 s.leaf.past, k);
  const Eigen::MatrixXd log_ratio =
      (s.leaf.gibbs.transition.array().log() -
       proposal.gibbs.transition.array().log())
          .matrix();
  const PathSampler sampler(proposal.gibbs);
  const double eps = sum_tolerance(l, n);

  constexpr std::int64_t kChunk = 1 << 14;
  const std::int64_t chunks = (options.samples + kChunk - 1) / kChunk;
  std::vector<Moments> partial(static_cast<std::size_t>(chunks));
  std::atomic<std::int64_t> next_chunk{0};
  const auto worker = [&] {
    for (std::int64_t c = next_chunk++; c < chunks; c = next_chunk++) {
      Moments m;
      const std::int64_t end = std::min(options.samples, (c + 1) * kChunk);
      for (std::int64_t i = c * kChunk; i < end; ++i) {
        CounterStream rng(options.seed, static_cast<std::uint64_t>(i));
        int state = s.leaf.start_state;
        double sum = 0.0;
        double log_w = 0.0;
        for (int t = 1; t <= s.steps; ++t) {
          const int next = sampler.next(state, rng.next_double());
          log_w += log_ratio(state, next);
          if (t >= k) sum += s.phi(next);
          state = next;
        }
        const bool hit = above_lower(l, sum, n, eps) && below_upper(l, sum, n, eps);
        m.add(hit ? std::exp(log_w) : 0.0);
      }
      partial[static_cast<std::size_t>(c)] = m;
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const auto threads = static_cast<std::int64_t>(
      std::min<std::int64_t>(options.threads > 0 ? options.threads : hw, chunks));
  {
    std::vector<std::jthread> pool;
    for (std::int64_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  Moments total;
  for (const Moments& m : partial) total.merge(m);

  DeviationPoint p;
  p.n = n;
  p.method = DeviationMethod::MonteCarlo;
  p.samples = options.samples;
  p.tilt = tilt;
  p.mass = total.mean;
  p.std_error = total.count > 1.0
                    ? std::sqrt(std::max(total.m2, 0.0) / (total.count - 1.0) / total.count)
                    : 0.0;
  p.mass_lower = p.mass_upper = p.mass;
  return finish(p);
}

double recommended_tilt(const SubshiftSpec& spec, const Potential& g,
                        const Potential& phi, const Interval& l) {
  const double mean = q_derivative(spec, g, phi, 0.0);
  if (l.contains(mean)) return 0.0;
  const ErgodicRange range = ergodic_range(spec, phi);
  double target = mean < l.lo ? l.lo : l.hi;
  target = std::clamp(target, range.min, range.max);
  const RateValue r = rate_scalar(spec, g, phi, target);
  return std::isfinite(r.tilt) ? r.tilt : 0.0;
}

RateFit rate_fit(const DeviationSeries& series) {
  const auto& pts = series.points;
  if (pts.size() < 4) {
    throw Error(ErrorKind::DegenerateFit, "rate fit needs at least 4 points");
  }
  for (const auto& p : pts) {
    if (!(p.mass > 0.0)) {
      throw Error(ErrorKind::DegenerateFit,
                  "rate fit needs positive masses (n = " + std::to_string(p.n) + ")");
    }
  }
  const auto m = static_cast<Eigen::Index>(pts.size());
  Eigen::MatrixXd design(m, 3);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double n = pts[static_cast<std::size_t>(i)].n;
    design(i, 0) = 1.0;
    design(i, 1) = std::log(n) / n;
    design(i, 2) = 1.0 / n;
    y(i) = -std::log(pts[static_cast<std::size_t>(i)].mass) / n;
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(y);
  RateFit fit;
  fit.estimate = coef(0);
  fit.log_coefficient = coef(1);
  fit.inverse_coefficient = coef(2);
  fit.points = static_cast<int>(m);
  fit.residual = std::sqrt((design * coef - y).squaredNorm() / static_cast<double>(m));

  const auto [lo_it, hi_it] = std::minmax_element(
      pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.n < b.n; });
  const double n_lo = lo_it->n;
  const double n_hi = hi_it->n;
  const auto model = [&](double n) {
    return coef(0) + coef(1) * std::log(n) / n + coef(2) / n;
  };
  int sign = 0;
  constexpr int kProbe = 256;
  double prev = model(n_lo);
  for (int i = 1; i <= kProbe; ++i) {
    const double cur = model(n_lo + (n_hi - n_lo) * i / kProbe);
    const double d = cur - prev;
    const int s = d > 1e-15 ? 1 : (d < -1e-15 ? -1 : 0);
    if (s != 0 && sign != 0 && s != sign) fit.monotone = false;
    if (s != 0) sign = s;
    prev = cur;
  }
  return fit;
}

}  // namespace ldplab
