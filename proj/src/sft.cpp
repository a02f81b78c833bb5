#include "ldplab/sft.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <sstream>

namespace ldplab {

namespace {

using BoolMatrix = std::vector<std::vector<char>>;

BoolMatrix bool_product(const BoolMatrix& a, const BoolMatrix& b) {
  const std::size_t m = a.size();
  BoolMatrix c(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < m; ++k) {
      if (!a[i][k]) continue;
      for (std::size_t j = 0; j < m; ++j) c[i][j] |= b[k][j];
    }
  }
  return c;
}

bool all_positive(const BoolMatrix& a) {
  return std::all_of(a.begin(), a.end(), [](const auto& row) {
    return std::all_of(row.begin(), row.end(), [](char v) { return v != 0; });
  });
}

// Builds the canonical representation of a sequence that is periodic with
// `left_period` below a and with `right_period` above b.
template <class At>
PointRep materialize(const At& at, long a, long b, std::size_t left_period,
                     std::size_t right_period) {
  PointRep r;
  r.offset = a;
  r.core.reserve(static_cast<std::size_t>(b - a + 1));
  for (long i = a; i <= b; ++i) r.core.push_back(at(i));
  r.left_cycle.resize(left_period);
  for (std::size_t j = 0; j < left_period; ++j) {
    r.left_cycle[left_period - 1 - j] = at(a - 1 - static_cast<long>(j));
  }
  r.right_cycle.resize(right_period);
  for (std::size_t j = 0; j < right_period; ++j) {
    r.right_cycle[j] = at(b + 1 + static_cast<long>(j));
  }
  return r;
}

// Interior vertices of a shortest path from `from` to `to` (exclusive).
Word shortest_path_interior(const SubshiftSpec& spec, Symbol from, Symbol to) {
  const int m = spec.alphabet_size();
  std::vector<int> parent(static_cast<std::size_t>(m), -1);
  std::deque<Symbol> queue;
  for (Symbol s : spec.successors(from)) {
    if (parent[s] == -1) {
      parent[s] = from;
      queue.push_back(s);
    }
  }
  // `from` itself may be reached again; the parent chain stops at `from`
  // the first time it is seen as a direct successor.
  while (!queue.empty() && parent[to] == -1) {
    const Symbol u = queue.front();
    queue.pop_front();
    for (Symbol v : spec.successors(u)) {
      if (parent[v] == -1) {
        parent[v] = u;
        queue.push_back(v);
      }
    }
  }
  Word interior;
  for (Symbol v = parent[to]; v != from; v = parent[v]) interior.push_back(v);
  std::reverse(interior.begin(), interior.end());
  return interior;
}

Symbol pick(const std::vector<Symbol>& options, CounterStream& rng) {
  return options[rng.below(options.size())];
}

}  // namespace

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPrimitive: return "NotPrimitive";
    case ErrorKind::EmptyRowOrColumn: return "EmptyRowOrColumn";
    case ErrorKind::InvalidMatrix: return "InvalidMatrix";
    case ErrorKind::InadmissibleWord: return "InadmissibleWord";
    case ErrorKind::InadmissibleConcatenation: return "InadmissibleConcatenation";
    case ErrorKind::BracketUndefined: return "BracketUndefined";
    case ErrorKind::IncompleteTable: return "IncompleteTable";
    case ErrorKind::InvalidPotential: return "InvalidPotential";
    case ErrorKind::MemoryTooLarge: return "MemoryTooLarge";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InadmissiblePast: return "InadmissiblePast";
    case ErrorKind::InconsistentStart: return "InconsistentStart";
    case ErrorKind::WordTooShort: return "WordTooShort";
    case ErrorKind::EnumerationTooLarge: return "EnumerationTooLarge";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::IncompatibleSupport: return "IncompatibleSupport";
    case ErrorKind::DegenerateFit: return "DegenerateFit";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

bool SubshiftSpec::admissible(std::span<const Symbol> word) const {
  for (Symbol s : word) {
    if (!valid_symbol(s)) return false;
  }
  for (std::size_t i = 1; i < word.size(); ++i) {
    if (!allowed(word[i - 1], word[i])) return false;
  }
  return true;
}

std::vector<Symbol> SubshiftSpec::successors(Symbol s) const {
  std::vector<Symbol> out;
  for (Symbol t = 0; t < size_; ++t) {
    if (allowed(s, t)) out.push_back(t);
  }
  return out;
}

std::vector<Symbol> SubshiftSpec::predecessors(Symbol s) const {
  std::vector<Symbol> out;
  for (Symbol t = 0; t < size_; ++t) {
    if (allowed(t, s)) out.push_back(t);
  }
  return out;
}

SubshiftSpec validate_spec(const BinaryMatrix& matrix) {
  const std::size_t m = matrix.size();
  if (m == 0) throw Error(ErrorKind::InvalidMatrix, "empty transition matrix");
  for (const auto& row : matrix) {
    if (row.size() != m) {
      throw Error(ErrorKind::InvalidMatrix, "transition matrix is not square");
    }
    for (int v : row) {
      if (v != 0 && v != 1) {
        throw Error(ErrorKind::InvalidMatrix,
                    "transition matrix entries must be 0 or 1");
      }
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    bool row_hit = false;
    bool col_hit = false;
    for (std::size_t j = 0; j < m; ++j) {
      row_hit = row_hit || matrix[i][j] != 0;
      col_hit = col_hit || matrix[j][i] != 0;
    }
    if (!row_hit || !col_hit) {
      throw Error(ErrorKind::EmptyRowOrColumn,
                  "symbol " + std::to_string(i) +
                      " has an empty row or column");
    }
  }

  BoolMatrix a(m, std::vector<char>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) a[i][j] = matrix[i][j] != 0;
  }
  const std::size_t wielandt = (m - 1) * (m - 1) + 1;
  BoolMatrix power = a;
  int q = 0;
  for (std::size_t p = 1; p <= wielandt; ++p) {
    if (all_positive(power)) {
      q = static_cast<int>(p);
      break;
    }
    power = bool_product(power, a);
  }
  if (q == 0) {
    throw Error(ErrorKind::NotPrimitive,
                "transition matrix is not primitive (system is not mixing)");
  }

  SubshiftSpec spec;
  spec.size_ = static_cast<int>(m);
  spec.primitivity_power_ = q;
  spec.transitions_ = matrix;
  return spec;
}

std::vector<Word> admissible_words(const SubshiftSpec& spec, int length) {
  std::vector<Word> out;
  for (Symbol s = 0; s < spec.alphabet_size(); ++s) {
    auto part = unstable_leaf_words(spec, s, length);
    out.insert(out.end(), std::make_move_iterator(part.begin()),
               std::make_move_iterator(part.end()));
  }
  return out;
}

std::vector<Word> unstable_leaf_words(const SubshiftSpec& spec, Symbol start,
                                      int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "word length must be >= 1");
  if (!spec.valid_symbol(start)) {
    throw Error(ErrorKind::InvalidArgument, "start symbol out of range");
  }
  std::vector<Word> out;
  Word w{start};
  // Depth-first in lexicographic order.
  std::vector<std::vector<Symbol>> pending;
  pending.push_back(spec.successors(start));
  std::reverse(pending.back().begin(), pending.back().end());
  if (n == 1) return {w};
  while (!pending.empty()) {
    auto& options = pending.back();
    if (options.empty()) {
      pending.pop_back();
      w.pop_back();
      continue;
    }
    const Symbol next = options.back();
    options.pop_back();
    w.push_back(next);
    if (static_cast<int>(w.size()) == n) {
      out.push_back(w);
      w.pop_back();
    } else {
      pending.push_back(spec.successors(next));
      std::reverse(pending.back().begin(), pending.back().end());
    }
  }
  return out;
}

Potential::Potential(int memory, std::map<Word, double> table)
    : memory_(memory), table_(std::move(table)) {
  if (memory_ < 1) {
    throw Error(ErrorKind::InvalidPotential, "potential memory must be >= 1");
  }
  for (const auto& [word, value] : table_) {
    if (static_cast<int>(word.size()) != memory_) {
      throw Error(ErrorKind::InvalidPotential,
                  "potential key " + format_word(word) +
                      " does not match memory " + std::to_string(memory_));
    }
  }
}

double Potential::operator()(std::span<const Symbol> window) const {
  if (static_cast<int>(window.size()) < memory_) {
    throw Error(ErrorKind::WordTooShort, "window shorter than potential memory");
  }
  const Word key(window.begin(), window.begin() + memory_);
  const auto it = table_.find(key);
  if (it == table_.end()) {
    throw Error(ErrorKind::IncompleteTable,
                "potential undefined on " + format_word(key));
  }
  return it->second;
}

Potential Potential::constant(const SubshiftSpec& spec, double value) {
  std::map<Word, double> table;
  for (Symbol s = 0; s < spec.alphabet_size(); ++s) table[{s}] = value;
  return Potential(1, std::move(table));
}

Potential Potential::indicator(const SubshiftSpec& spec, Symbol symbol) {
  std::map<Word, double> table;
  for (Symbol s = 0; s < spec.alphabet_size(); ++s) {
    table[{s}] = s == symbol ? 1.0 : 0.0;
  }
  return Potential(1, std::move(table));
}

Potential Potential::bernoulli(const SubshiftSpec& spec,
                               const std::vector<double>& probabilities) {
  if (static_cast<int>(probabilities.size()) != spec.alphabet_size()) {
    throw Error(ErrorKind::InvalidPotential,
                "one probability per symbol is required");
  }
  std::map<Word, double> table;
  for (Symbol s = 0; s < spec.alphabet_size(); ++s) {
    if (!(probabilities[s] > 0.0)) {
      throw Error(ErrorKind::InvalidPotential,
                  "Bernoulli weights must be positive");
    }
    table[{s}] = std::log(probabilities[s]);
  }
  return Potential(1, std::move(table));
}

void validate_potential(const SubshiftSpec& spec, const Potential& phi) {
  for (const Word& w : admissible_words(spec, phi.memory())) {
    const auto it = phi.table().find(w);
    if (it == phi.table().end()) {
      throw Error(ErrorKind::IncompleteTable,
                  "potential table is missing admissible word " +
                      format_word(w));
    }
    if (!std::isfinite(it->second) ||
        std::abs(it->second) > kMaxPotentialMagnitude) {
      throw Error(ErrorKind::InvalidPotential,
                  "potential value on " + format_word(w) +
                      " is not finite or exceeds 700 in magnitude");
    }
  }
}

Potential lift(const SubshiftSpec& spec, const Potential& phi, int memory) {
  if (memory < phi.memory()) {
    throw Error(ErrorKind::MemoryTooLarge,
                "cannot lift a potential to a smaller memory");
  }
  if (memory == phi.memory()) return phi;
  std::map<Word, double> table;
  for (Word& w : admissible_words(spec, memory)) {
    const double v = phi(w);
    table.emplace(std::move(w), v);
  }
  return Potential(memory, std::move(table));
}

Potential combine(const SubshiftSpec& spec, double a_weight,
                  const Potential& a, double b_weight, const Potential& b) {
  const int memory = std::max(a.memory(), b.memory());
  std::map<Word, double> table;
  for (Word& w : admissible_words(spec, memory)) {
    const double v = a_weight * a(w) + b_weight * b(w);
    table.emplace(std::move(w), v);
  }
  return Potential(memory, std::move(table));
}

double birkhoff_sum(const SubshiftSpec& spec, const Word& w,
                    const Potential& phi, const Word& continuation) {
  const std::size_t need = static_cast<std::size_t>(phi.memory() - 1);
  if (continuation.size() < need) {
    throw Error(ErrorKind::WordTooShort,
                "continuation must supply memory - 1 symbols");
  }
  Word full = w;
  full.insert(full.end(), continuation.begin(), continuation.end());
  if (!spec.admissible(full)) {
    throw Error(ErrorKind::InadmissibleConcatenation,
                "word followed by continuation is not admissible");
  }
  double sum = 0.0;
  const std::span<const Symbol> view(full);
  for (std::size_t i = 0; i < w.size(); ++i) {
    sum += phi(view.subspan(i, static_cast<std::size_t>(phi.memory())));
  }
  return sum;
}

std::map<Word, double> EmpiricalMeasure::frequencies() const {
  std::map<Word, double> out;
  for (const auto& [word, count] : counts) {
    out[word] = static_cast<double>(count) / static_cast<double>(length);
  }
  return out;
}

EmpiricalMeasure orbital_empirical(const Word& w, int window) {
  if (window < 1 || static_cast<int>(w.size()) < window) {
    throw Error(ErrorKind::WordTooShort, "word shorter than the window");
  }
  EmpiricalMeasure e;
  e.window = window;
  e.length = static_cast<std::int64_t>(w.size()) - window + 1;
  for (std::int64_t i = 0; i < e.length; ++i) {
    ++e.counts[Word(w.begin() + i, w.begin() + i + window)];
  }
  return e;
}

Symbol PointRep::at(long i) const {
  const long first = lo();
  const long last = hi();
  if (i < first) {
    const long p = static_cast<long>(left_cycle.size());
    const long d = (first - 1 - i) % p;
    return left_cycle[static_cast<std::size_t>(p - 1 - d)];
  }
  if (i > last) {
    const long q = static_cast<long>(right_cycle.size());
    return right_cycle[static_cast<std::size_t>((i - last - 1) % q)];
  }
  long k = i - first;
  const long lt = static_cast<long>(left_transient.size());
  if (k < lt) return left_transient[static_cast<std::size_t>(k)];
  k -= lt;
  const long c = static_cast<long>(core.size());
  if (k < c) return core[static_cast<std::size_t>(k)];
  return right_transient[static_cast<std::size_t>(k - c)];
}

bool operator==(const PointRep& a, const PointRep& b) {
  // Both sequences are periodic below `first` and above `last`. By the
  // Fine-Wilf theorem, agreement on p1 + p2 consecutive tail positions
  // forces agreement on the whole tail.
  const long first = std::min(a.lo(), b.lo()) -
                     static_cast<long>(a.left_cycle.size() +
                                       b.left_cycle.size());
  const long last = std::max(a.hi(), b.hi()) +
                    static_cast<long>(a.right_cycle.size() +
                                      b.right_cycle.size());
  for (long i = first; i <= last; ++i) {
    if (a.at(i) != b.at(i)) return false;
  }
  return true;
}

void check_point(const SubshiftSpec& spec, const PointRep& x) {
  if (x.left_cycle.empty() || x.right_cycle.empty()) {
    throw Error(ErrorKind::InadmissibleWord, "point cycles must be nonempty");
  }
  if (x.core.empty() || x.offset > 0 ||
      x.offset + static_cast<long>(x.core.size()) <= 0) {
    throw Error(ErrorKind::InadmissibleWord,
                "point core must contain coordinate 0");
  }
  // Two full periods on each side cover every junction and wrap-around.
  const long first = x.lo() - 2 * static_cast<long>(x.left_cycle.size()) - 1;
  const long last = x.hi() + 2 * static_cast<long>(x.right_cycle.size()) + 1;
  Symbol prev = x.at(first);
  if (!spec.valid_symbol(prev)) {
    throw Error(ErrorKind::InadmissibleWord, "symbol out of range");
  }
  for (long i = first + 1; i <= last; ++i) {
    const Symbol s = x.at(i);
    if (!spec.valid_symbol(s) || !spec.allowed(prev, s)) {
      throw Error(ErrorKind::InadmissibleWord,
                  "point is not admissible at coordinate " +
                      std::to_string(i));
    }
    prev = s;
  }
}

PointRep periodic_point(const Word& cycle) {
  PointRep x;
  x.left_cycle = cycle;
  x.core = cycle;
  x.right_cycle = cycle;
  x.offset = 0;
  return x;
}

PointRep shift(const PointRep& x, long steps) {
  const auto at = [&](long i) { return x.at(i + steps); };
  const long a = std::min(x.lo() - steps, 0L);
  const long b = std::max(x.hi() - steps, 0L);
  return materialize(at, a, b, x.left_cycle.size(), x.right_cycle.size());
}

double distance(const PointRep& x, const PointRep& y) {
  const long reach =
      std::max({std::abs(x.lo()), std::abs(x.hi()), std::abs(y.lo()),
                std::abs(y.hi())}) +
      static_cast<long>(x.left_cycle.size() + y.left_cycle.size() +
                        x.right_cycle.size() + y.right_cycle.size()) +
      1;
  for (long k = 0; k <= reach; ++k) {
    if (x.at(k) != y.at(k) || x.at(-k) != y.at(-k)) {
      return std::ldexp(1.0, static_cast<int>(-k));
    }
  }
  return 0.0;
}

PointRep bracket(const PointRep& x, const PointRep& y) {
  if (x.at(0) != y.at(0)) {
    throw Error(ErrorKind::BracketUndefined,
                "bracket needs x_0 == y_0 (distance below 1)");
  }
  const auto at = [&](long i) { return i <= 0 ? y.at(i) : x.at(i); };
  const long a = std::min(y.lo(), 0L);
  const long b = std::max(x.hi(), 0L);
  return materialize(at, a, b, y.left_cycle.size(), x.right_cycle.size());
}

PointRep random_point(const SubshiftSpec& spec, Symbol symbol_at_zero,
                      CounterStream& rng) {
  PointRep x;
  // Core: backward and forward walks through the prescribed 0-symbol.
  Word back;
  Symbol s = symbol_at_zero;
  for (auto k = rng.below(6); k > 0; --k) {
    s = pick(spec.predecessors(s), rng);
    back.push_back(s);
  }
  std::reverse(back.begin(), back.end());
  x.core = back;
  x.core.push_back(symbol_at_zero);
  x.offset = -static_cast<long>(back.size());
  s = symbol_at_zero;
  for (auto k = rng.below(6); k > 0; --k) {
    s = pick(spec.successors(s), rng);
    x.core.push_back(s);
  }

  // Right transient then a closed walk.
  s = x.core.back();
  for (auto k = rng.below(3); k > 0; --k) {
    s = pick(spec.successors(s), rng);
    x.right_transient.push_back(s);
  }
  const Symbol cycle_start = pick(spec.successors(s), rng);
  x.right_cycle.push_back(cycle_start);
  s = cycle_start;
  for (auto k = rng.below(4); k > 0; --k) {
    s = pick(spec.successors(s), rng);
    x.right_cycle.push_back(s);
  }
  const Word closing = shortest_path_interior(spec, s, cycle_start);
  x.right_cycle.insert(x.right_cycle.end(), closing.begin(), closing.end());

  // Left transient then a closed walk, built backwards.
  s = x.core.front();
  for (auto k = rng.below(3); k > 0; --k) {
    s = pick(spec.predecessors(s), rng);
    x.left_transient.insert(x.left_transient.begin(), s);
  }
  const Symbol cycle_end = pick(spec.predecessors(s), rng);
  Word reversed{cycle_end};
  s = cycle_end;
  for (auto k = rng.below(4); k > 0; --k) {
    s = pick(spec.predecessors(s), rng);
    reversed.push_back(s);
  }
  x.left_cycle = shortest_path_interior(spec, cycle_end, s);
  x.left_cycle.insert(x.left_cycle.end(), reversed.rbegin(), reversed.rend());
  return x;
}

AxiomReport axioms_check(const SubshiftSpec& spec, int sample_count,
                         std::uint64_t seed) {
  AxiomReport report;
  report.samples = sample_count;
  constexpr double lambda = 0.5;
  for (int i = 0; i < sample_count; ++i) {
    CounterStream rng(seed, static_cast<std::uint64_t>(i));
    const Symbol c =
        static_cast<Symbol>(rng.below(static_cast<std::uint64_t>(spec.alphabet_size())));
    const PointRep x = random_point(spec, c, rng);
    const PointRep y = random_point(spec, c, rng);
    const PointRep z = random_point(spec, c, rng);

    if (!(bracket(x, x) == x)) ++report.idempotence_violations;

    ++report.ss1_checked;
    if (!(bracket(bracket(x, y), z) == bracket(x, z))) ++report.ss1_violations;

    ++report.ss2_checked;
    if (!(bracket(x, bracket(y, z)) == bracket(x, z))) ++report.ss2_violations;

    // SS3 on the raw pair when defined, and on (x, [x,y]) which always is.
    const auto ss3 = [&](const PointRep& u, const PointRep& v) {
      if (u.at(1) != v.at(1)) return;
      ++report.ss3_checked;
      if (!(shift(bracket(u, v), 1) == bracket(shift(u, 1), shift(v, 1)))) {
        ++report.ss3_violations;
      }
    };
    ss3(x, y);
    ss3(x, bracket(x, y));

    const auto contraction = [&](const PointRep& u, const PointRep& v,
                                 long step, int& checked, int& violations) {
      ++checked;
      const double d = distance(u, v);
      const double d_image = distance(shift(u, step), shift(v, step));
      if (d == 0.0) {
        if (d_image != 0.0) ++violations;
        return;
      }
      const double ratio = d_image / d;
      report.max_contraction_ratio =
          std::max(report.max_contraction_ratio, ratio);
      if (ratio > lambda) ++violations;
    };

    // Stable set of x: same future. SS4 uses f.
    const PointRep ys = bracket(x, y);
    const PointRep zs = bracket(x, z);
    if (!(bracket(ys, x) == x) || !(bracket(zs, x) == x)) {
      ++report.ss4_violations;
    } else {
      contraction(ys, zs, 1, report.ss4_checked, report.ss4_violations);
    }

    // Unstable set of x: same past. SS5 uses f^{-1}.
    const PointRep yu = bracket(y, x);
    const PointRep zu = bracket(z, x);
    if (!(bracket(x, yu) == x) || !(bracket(x, zu) == x)) {
      ++report.ss5_violations;
    } else {
      contraction(yu, zu, -1, report.ss5_checked, report.ss5_violations);
    }

    if (distance(x, z) > std::max(distance(x, y), distance(y, z))) {
      ++report.ultrametric_violations;
    }
  }
  report.contraction = lambda;
  return report;
}

std::string format_word(const Word& w) {
  const bool wide = std::any_of(w.begin(), w.end(), [](Symbol s) {
    return s < 0 || s > 9;
  });
  std::ostringstream out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (wide && i > 0) out << '.';
    out << w[i];
  }
  return out.str();
}

}  // namespace ldplab
