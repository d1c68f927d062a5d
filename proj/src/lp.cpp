#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "pssr/errors.hpp"
#include "pssr/lp.hpp"
#include "simplex.hpp"
#include "small_rational.hpp"

namespace pssr {

// ---------------------------------------------------------------------------
// ConstraintProgram

int ConstraintProgram::add_variable(std::string name, bool integral, Rational lower, std::optional<Rational> upper) {
  variables_.push_back(Variable{std::move(name), std::move(lower), std::move(upper), integral});
  return static_cast<int>(variables_.size()) - 1;
}

Row ConstraintProgram::canonical(const Row& row) const {
  std::map<int, Rational> acc;
  for (const auto& t : row) {
    if (t.var < 0 || t.var >= variable_count()) {
      throw InvalidInput("row references undeclared variable " + std::to_string(t.var));
    }
    acc[t.var] += t.coef;
  }
  Row out;
  out.reserve(acc.size());
  for (auto& [var, coef] : acc) {
    if (coef != 0) out.push_back(Term{var, coef});
  }
  return out;
}

void ConstraintProgram::add_constraint(const Row& row, Relation relation, Rational rhs, std::string name) {
  constraints_.push_back(Constraint{canonical(row), relation, std::move(rhs), std::move(name)});
}

void ConstraintProgram::set_objective(const Row& row, Sense sense) {
  objective_ = canonical(row);
  sense_ = sense;
}

void ConstraintProgram::fix_variable(int var, const Rational& value) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.lower = value;
  v.upper = value;
}

void ConstraintProgram::set_bounds(int var, Rational lower, std::optional<Rational> upper) {
  auto& v = variables_.at(static_cast<std::size_t>(var));
  v.lower = std::move(lower);
  v.upper = std::move(upper);
}

Rational ConstraintProgram::evaluate(const Row& row, const std::vector<Rational>& x) const {
  Rational s = 0;
  for (const auto& t : row) s += t.coef * x.at(static_cast<std::size_t>(t.var));
  return s;
}

std::vector<std::string> ConstraintProgram::violations(const std::vector<Rational>& x, bool check_integrality) const {
  std::vector<std::string> out;
  if (x.size() != variables_.size()) {
    out.push_back("expected " + std::to_string(variables_.size()) + " values, got " + std::to_string(x.size()));
    return out;
  }
  for (std::size_t j = 0; j < variables_.size(); ++j) {
    const auto& v = variables_[j];
    if (x[j] < v.lower) out.push_back(v.name + " = " + to_string(x[j]) + " below lower bound " + to_string(v.lower));
    if (v.upper && x[j] > *v.upper) {
      out.push_back(v.name + " = " + to_string(x[j]) + " above upper bound " + to_string(*v.upper));
    }
    if (check_integrality && v.integral && !is_integer(x[j])) {
      out.push_back(v.name + " = " + to_string(x[j]) + " is not integral");
    }
  }
  for (std::size_t i = 0; i < constraints_.size(); ++i) {
    const auto& c = constraints_[i];
    const Rational lhs = evaluate(c.row, x);
    bool ok = true;
    switch (c.relation) {
      case Relation::LessEqual: ok = lhs <= c.rhs; break;
      case Relation::Equal: ok = lhs == c.rhs; break;
      case Relation::GreaterEqual: ok = lhs >= c.rhs; break;
    }
    if (!ok) {
      const std::string label = c.name.empty() ? "row " + std::to_string(i) : c.name;
      out.push_back(label + ": lhs " + to_string(lhs) + " vs rhs " + to_string(c.rhs));
    }
  }
  return out;
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::BudgetExceeded: return "budget_exceeded";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Simplex

namespace detail {
namespace {

using Num = SmallRational;

struct Entry {
  int col;
  Num val;
};
using SparseRow = std::vector<Entry>;

const Num* find_entry(const SparseRow& row, int col) {
  auto it = std::lower_bound(row.begin(), row.end(), col, [](const Entry& e, int c) { return e.col < c; });
  if (it == row.end() || it->col != col) return nullptr;
  return &it->val;
}

// a + f * b, both sorted by column.
// a += f * b, both sorted by column. `out` is scratch storage.
void axpy(SparseRow& a, const Num& f, const SparseRow& b, SparseRow& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  std::size_t i = 0, k = 0;
  Num tmp;
  while (i < a.size() || k < b.size()) {
    if (k == b.size() || (i < a.size() && a[i].col < b[k].col)) {
      out.push_back(std::move(a[i++]));
    } else if (i == a.size() || b[k].col < a[i].col) {
      out.push_back(Entry{b[k].col, f * b[k].val});
      ++k;
    } else {
      tmp = a[i].val + f * b[k].val;
      if (!tmp.is_zero()) out.push_back(Entry{a[i].col, std::move(tmp)});
      ++i;
      ++k;
    }
  }
  a.swap(out);
}

enum class PhaseResult { Optimal, Unbounded, Budget };

class Tableau {
 public:
  std::vector<SparseRow> rows;
  std::vector<Num> rhs;
  std::vector<int> basis;
  std::vector<Num> reduced;  // dense reduced costs
  Num value;                      // c_B^T x_B
  std::vector<char> may_enter;
  int cols = 0;
  long pivots = 0;
  SparseRow scratch_;
  std::vector<double> norm_;

  void set_costs(const std::vector<Num>& cost) {
    reduced = cost;
    value = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Num& cb = cost[static_cast<std::size_t>(basis[i])];
      if (cb.is_zero()) continue;
      for (const auto& e : rows[i]) reduced[static_cast<std::size_t>(e.col)] -= cb * e.val;
      value += cb * rhs[i];
    }
  }

  void pivot(std::size_t r, int e) {
    const Num p = *find_entry(rows[r], e);
    if (!(p == Num(1))) {
      for (auto& en : rows[r]) en.val /= p;
      rhs[r] /= p;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == r) continue;
      const Num* a = find_entry(rows[i], e);
      if (!a) continue;
      const Num f = -*a;
      axpy(rows[i], f, rows[r], scratch_);
      rhs[i] += f * rhs[r];
    }
    const Num de = reduced[static_cast<std::size_t>(e)];
    if (!de.is_zero()) {
      for (const auto& en : rows[r]) reduced[static_cast<std::size_t>(en.col)] -= de * en.val;
      value += de * rhs[r];
    }
    basis[r] = e;
    ++pivots;
  }

  // Steepest-edge choice: most negative reduced cost relative to the length
  // of its tableau column. Floating point only ranks candidates; every value
  // the solver reports is computed exactly.
  int steepest_candidate() {
    norm_.assign(static_cast<std::size_t>(cols), 1.0);
    bool any = false;
    for (int j = 0; j < cols; ++j) {
      if (may_enter[static_cast<std::size_t>(j)] && reduced[static_cast<std::size_t>(j)].sign() < 0) {
        any = true;
        break;
      }
    }
    if (!any) return -1;
    for (const auto& row : rows) {
      for (const auto& e : row) {
        const double v = e.val.approx();
        norm_[static_cast<std::size_t>(e.col)] += v * v;
      }
    }
    int best = -1;
    double best_score = 0;
    for (int j = 0; j < cols; ++j) {
      if (!may_enter[static_cast<std::size_t>(j)]) continue;
      const Num& dj = reduced[static_cast<std::size_t>(j)];
      if (dj.sign() >= 0) continue;
      const double d = dj.approx();
      const double score = d * d / norm_[static_cast<std::size_t>(j)];
      if (best < 0 || score > best_score) {
        best = j;
        best_score = score;
      }
    }
    return best;
  }

  PhaseResult run(const SolveOptions& options, std::optional<Clock::time_point> deadline) {
    int degenerate = 0;
    bool bland = false;
    while (true) {
      if (pivots >= options.max_pivots) return PhaseResult::Budget;
      if (deadline && (pivots & 15) == 0 && Clock::now() > *deadline) return PhaseResult::Budget;

      int enter = -1;
      if (bland) {
        for (int j = 0; j < cols; ++j) {
          if (may_enter[static_cast<std::size_t>(j)] && reduced[static_cast<std::size_t>(j)].sign() < 0) {
            enter = j;
            break;
          }
        }
      } else {
        enter = steepest_candidate();
      }
      if (enter < 0) return PhaseResult::Optimal;

      // Ratio test; ties go to the smallest basic column (Bland's leaving rule).
      std::ptrdiff_t leave = -1;
      const Num* best_a = nullptr;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const Num* a = find_entry(rows[i], enter);
        if (!a || a->sign() <= 0) continue;
        if (leave < 0) {
          leave = static_cast<std::ptrdiff_t>(i);
          best_a = a;
          continue;
        }
        // rhs_i / a_i  vs  rhs_leave / a_leave
        const int cmp = Num::compare_ratios(rhs[i], *a, rhs[static_cast<std::size_t>(leave)], *best_a);
        if (cmp < 0 || (cmp == 0 && basis[i] < basis[static_cast<std::size_t>(leave)])) {
          leave = static_cast<std::ptrdiff_t>(i);
          best_a = a;
        }
      }
      if (leave < 0) return PhaseResult::Unbounded;

      const bool degenerate_step = rhs[static_cast<std::size_t>(leave)].is_zero();
      pivot(static_cast<std::size_t>(leave), enter);
      if (degenerate_step) {
        if (++degenerate >= options.degenerate_streak_limit) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
    }
  }
};

// Dense floating-point simplex on a perturbed copy of the tableau. It only
// proposes a basis; nothing it computes is reported.
class FloatTableau {
 public:
  FloatTableau(const Tableau& t) : m_(t.rows.size()), n_(static_cast<std::size_t>(t.cols)) {
    a_.assign(m_ * n_, 0.0);
    b_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (const auto& e : t.rows[i]) a_[i * n_ + static_cast<std::size_t>(e.col)] = e.val.approx();
      b_[i] = t.rhs[i].approx();
    }
    basis = t.basis;
    may_enter = t.may_enter;
  }

  // Lifts degenerate vertices apart on rows that carry a slack.
  void perturb(const std::vector<char>& rows) {
    std::uint64_t h = 0x9e3779b97f4a7c15ull;
    for (std::size_t i = 0; i < m_; ++i) {
      h ^= h << 13;
      h ^= h >> 7;
      h ^= h << 17;
      if (rows[i]) b_[i] += 1e-7 * (1.0 + static_cast<double>(h % 1024) / 1024.0);
    }
  }

  void set_costs(const std::vector<double>& cost) {
    w_.assign(n_, 1.0);
    d_ = cost;
    value = 0;
    for (std::size_t i = 0; i < m_; ++i) {
      const double cb = cost[static_cast<std::size_t>(basis[i])];
      if (cb == 0) continue;
      const double* row = &a_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) d_[j] -= cb * row[j];
      value += cb * b_[i];
    }
  }

  double entry(std::size_t i, int j) const { return a_[i * n_ + static_cast<std::size_t>(j)]; }
  double rhs(std::size_t i) const { return b_[i]; }
  std::size_t rows() const { return m_; }
  std::size_t cols() const { return n_; }

  void pivot(std::size_t r, int e) {
    const std::size_t ec = static_cast<std::size_t>(e);
    double* prow = &a_[r * n_];
    const double p = prow[ec];
    nz_.clear();
    for (std::size_t j = 0; j < n_; ++j) {
      if (prow[j] == 0) continue;
      prow[j] /= p;
      if (std::abs(prow[j]) < kDrop) {
        prow[j] = 0;
        continue;
      }
      nz_.push_back(j);
    }
    prow[ec] = 1;
    b_[r] /= p;
    // Devex reference weights.
    const double we = w_[ec];
    for (std::size_t j : nz_) w_[j] = std::max(w_[j], prow[j] * prow[j] * we);
    w_[static_cast<std::size_t>(basis[r])] = std::max(we / (p * p), 1.0);
    w_[ec] = 1;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &a_[i * n_];
      const double f = row[ec];
      if (f == 0) continue;
      for (std::size_t j : nz_) {
        double v = row[j] - f * prow[j];
        row[j] = std::abs(v) < kDrop ? 0.0 : v;
      }
      row[ec] = 0;
      b_[i] -= f * b_[r];
      if (std::abs(b_[i]) < kDrop) b_[i] = 0;
    }
    const double de = d_[ec];
    if (de != 0) {
      for (std::size_t j : nz_) d_[j] -= de * prow[j];
      d_[ec] = 0;
      value += de * b_[r];
    }
    basis[r] = e;
    ++pivots;
  }

  PhaseResult run(long max_pivots, std::optional<Clock::time_point> deadline) {
    while (true) {
      if (pivots >= max_pivots) return PhaseResult::Budget;
      if (deadline && (pivots & 15) == 0 && Clock::now() > *deadline) return PhaseResult::Budget;
      int enter = -1;
      double best = 0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (may_enter[j] && d_[j] < -kOpt) {
          const double score = d_[j] * d_[j] / w_[j];
          if (score > best) {
            best = score;
            enter = static_cast<int>(j);
          }
        }
      }
      if (enter < 0) return PhaseResult::Optimal;
      // Two-pass ratio test with a small feasibility allowance.
      double theta = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = entry(i, enter);
        if (a > kPiv) theta = std::min(theta, (std::max(b_[i], 0.0) + kFeas) / a);
      }
      if (!std::isfinite(theta)) return PhaseResult::Unbounded;
      std::ptrdiff_t leave = -1;
      double best_a = 0;
      for (std::size_t i = 0; i < m_; ++i) {
        const double a = entry(i, enter);
        if (a > kPiv && std::max(b_[i], 0.0) / a <= theta && a > best_a) {
          best_a = a;
          leave = static_cast<std::ptrdiff_t>(i);
        }
      }
      pivot(static_cast<std::size_t>(leave), enter);
      for (auto& v : b_) {
        if (v < 0 && v > -kFeas) v = 0;
      }
    }
  }

  std::vector<int> basis;
  std::vector<char> may_enter;
  double value = 0;
  long pivots = 0;

 private:
  static constexpr double kDrop = 1e-12;
  static constexpr double kPiv = 1e-9;
  static constexpr double kFeas = 1e-9;
  static constexpr double kOpt = 1e-9;

  std::size_t m_, n_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> d_;
  std::vector<double> w_;
  std::vector<std::size_t> nz_;
};

// Exact solve of a square sparse system by Gaussian elimination with a
// Markowitz-style pivot order. Returns nullopt when the system is singular.
std::optional<std::vector<Num>> solve_square(std::vector<SparseRow> eqs, std::vector<Num> rhs, std::size_t n) {
  if (eqs.size() != n) return std::nullopt;
  std::vector<std::set<std::size_t>> rows_of(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto& e : eqs[r]) rows_of[static_cast<std::size_t>(e.col)].insert(r);
  }
  std::vector<char> var_done(n, 0), eq_done(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> order;  // (equation, variable)
  SparseRow scratch;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t v = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (var_done[c]) continue;
      if (v == n || rows_of[c].size() < rows_of[v].size()) v = c;
      if (rows_of[v].size() <= 1) break;
    }
    if (rows_of[v].empty()) return std::nullopt;
    std::size_t p = n;
    for (std::size_t r : rows_of[v]) {
      if (p == n || eqs[r].size() < eqs[p].size()) p = r;
    }
    const Num pv = *find_entry(eqs[p], static_cast<int>(v));
    const std::vector<std::size_t> others(rows_of[v].begin(), rows_of[v].end());
    for (std::size_t r : others) {
      if (r == p) continue;
      const Num f = -(*find_entry(eqs[r], static_cast<int>(v)) / pv);
      for (const auto& e : eqs[r]) rows_of[static_cast<std::size_t>(e.col)].erase(r);
      axpy(eqs[r], f, eqs[p], scratch);
      for (const auto& e : eqs[r]) rows_of[static_cast<std::size_t>(e.col)].insert(r);
      rhs[r] += f * rhs[p];
    }
    for (const auto& e : eqs[p]) rows_of[static_cast<std::size_t>(e.col)].erase(p);
    var_done[v] = 1;
    eq_done[p] = 1;
    order.emplace_back(p, v);
  }
  std::vector<Num> x(n, Num(0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto [p, v] = *it;
    Num acc = rhs[p];
    Num pv;
    for (const auto& e : eqs[p]) {
      if (static_cast<std::size_t>(e.col) == v) {
        pv = e.val;
      } else {
        acc -= e.val * x[static_cast<std::size_t>(e.col)];
      }
    }
    x[v] = acc / pv;
  }
  return x;
}

// Computes the basic solution and row multipliers of `basis` exactly. When
// the basis is primal feasible (artificials at zero) and no enterable column
// prices out, installs rhs, basis, reduced costs and value into `tab`
// (rows are left untouched) and returns true.
bool certify_basis(Tableau& tab, const std::vector<int>& basis, const std::vector<Num>& cost, int first_art) {
  const std::size_t m = tab.rows.size();
  std::vector<std::ptrdiff_t> pos(static_cast<std::size_t>(tab.cols), -1);
  for (std::size_t i = 0; i < m; ++i) {
    if (basis[i] < 0 || pos[static_cast<std::size_t>(basis[i])] >= 0) return false;
    pos[static_cast<std::size_t>(basis[i])] = static_cast<std::ptrdiff_t>(i);
  }
  std::vector<SparseRow> primal(m), dual(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (const auto& e : tab.rows[r]) {
      const auto k = pos[static_cast<std::size_t>(e.col)];
      if (k < 0) continue;
      primal[r].push_back(Entry{static_cast<int>(k), e.val});
      dual[static_cast<std::size_t>(k)].push_back(Entry{static_cast<int>(r), e.val});
    }
  }
  for (auto& row : primal) {
    std::sort(row.begin(), row.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
  }
  auto x = solve_square(std::move(primal), tab.rhs, m);
  if (!x) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const int sgn = (*x)[i].sign();
    if (sgn < 0 || (sgn > 0 && basis[i] >= first_art)) return false;
  }
  std::vector<Num> cb(m);
  for (std::size_t i = 0; i < m; ++i) cb[i] = cost[static_cast<std::size_t>(basis[i])];
  auto y = solve_square(std::move(dual), cb, m);
  if (!y) return false;
  std::vector<Num> reduced = cost;
  for (std::size_t r = 0; r < m; ++r) {
    const Num& yr = (*y)[r];
    if (yr.is_zero()) continue;
    for (const auto& e : tab.rows[r]) reduced[static_cast<std::size_t>(e.col)] -= yr * e.val;
  }
  for (int j = 0; j < tab.cols; ++j) {
    if (tab.may_enter[static_cast<std::size_t>(j)] && pos[static_cast<std::size_t>(j)] < 0 &&
        reduced[static_cast<std::size_t>(j)].sign() < 0) {
      return false;
    }
  }
  Num value = 0;
  for (std::size_t i = 0; i < m; ++i) value += cb[i] * (*x)[i];
  tab.rhs = std::move(*x);
  tab.basis = basis;
  tab.reduced = std::move(reduced);
  tab.value = std::move(value);
  return true;
}

// Pivots `tab` onto `basis`. Returns false (leaving `tab` in an unspecified
// state) when the basis is singular or not primal feasible.
bool warm_start(Tableau& tab, const std::vector<int>& basis) {
  const std::size_t m = tab.rows.size();
  std::vector<char> wanted(static_cast<std::size_t>(tab.cols), 0);
  for (int c : basis) wanted[static_cast<std::size_t>(c)] = 1;
  for (int c : basis) {
    if (std::find(tab.basis.begin(), tab.basis.end(), c) != tab.basis.end()) continue;
    std::ptrdiff_t r = -1;
    for (std::size_t i = 0; i < m; ++i) {
      if (wanted[static_cast<std::size_t>(tab.basis[i])]) continue;
      if (find_entry(tab.rows[i], c)) {
        r = static_cast<std::ptrdiff_t>(i);
        break;
      }
    }
    if (r < 0) return false;
    tab.pivot(static_cast<std::size_t>(r), c);
  }
  for (const auto& v : tab.rhs) {
    if (v.sign() < 0) return false;
  }
  return true;
}

// Runs both phases in floating point and returns the final basis when the
// perturbed problem reports an optimum.
std::optional<std::vector<int>> float_basis(const Tableau& tab, const std::vector<Num>& cost, int first_art,
                                            const std::vector<char>& has_slack, long max_pivots,
                                            std::optional<Clock::time_point> deadline, long& pivots) {
  constexpr std::size_t kMaxDenseEntries = 40'000'000;
  if (tab.rows.size() * static_cast<std::size_t>(tab.cols) > kMaxDenseEntries) return std::nullopt;
  FloatTableau ft(tab);
  ft.perturb(has_slack);
  bool have_art = false;
  for (int c : ft.basis) have_art = have_art || c >= first_art;
  if (have_art) {
    std::vector<double> c1(ft.cols(), 0.0);
    for (std::size_t c = static_cast<std::size_t>(first_art); c < ft.cols(); ++c) c1[c] = 1.0;
    ft.set_costs(c1);
    const auto res = ft.run(max_pivots, deadline);
    pivots = ft.pivots;
    if (res != PhaseResult::Optimal || ft.value > 1e-5) return std::nullopt;
    for (std::size_t i = 0; i < ft.rows(); ++i) {
      if (ft.basis[i] < first_art) continue;
      for (int j = 0; j < first_art; ++j) {
        if (std::abs(ft.entry(i, j)) > 1e-7 && std::find(ft.basis.begin(), ft.basis.end(), j) == ft.basis.end()) {
          ft.pivot(i, j);
          break;
        }
      }
    }
  }
  std::vector<double> c2(ft.cols());
  for (std::size_t j = 0; j < ft.cols(); ++j) c2[j] = cost[j].approx();
  ft.set_costs(c2);
  const auto res = ft.run(max_pivots, deadline);
  pivots = ft.pivots;
  if (res != PhaseResult::Optimal) return std::nullopt;
  return ft.basis;
}

}  // namespace

std::optional<Clock::time_point> deadline_from(const SolveOptions& options) {
  if (options.time_limit.count() <= 0) return std::nullopt;
  return Clock::now() + options.time_limit;
}

Bounds program_bounds(const ConstraintProgram& program) {
  Bounds b;
  for (const auto& v : program.variables()) {
    b.lower.push_back(v.lower);
    b.upper.push_back(v.upper);
  }
  return b;
}

Solution solve_relaxation(const ConstraintProgram& program, const Bounds& bounds, const SolveOptions& options,
                          std::optional<Clock::time_point> deadline) {
  const int nvars = program.variable_count();
  Solution sol;
  if (program.objective().empty()) throw InvalidInput("program has an empty objective");

  // Structural columns: every variable with a non-degenerate range, shifted
  // so that its lower bound sits at zero.
  std::vector<int> column_of(static_cast<std::size_t>(nvars), -1);
  std::vector<int> var_of;
  for (int j = 0; j < nvars; ++j) {
    const auto& up = bounds.upper[static_cast<std::size_t>(j)];
    if (up && *up < bounds.lower[static_cast<std::size_t>(j)]) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    if (up && *up == bounds.lower[static_cast<std::size_t>(j)]) continue;
    column_of[static_cast<std::size_t>(j)] = static_cast<int>(var_of.size());
    var_of.push_back(j);
  }
  const int nstruct = static_cast<int>(var_of.size());

  struct StdRow {
    SparseRow row;
    Relation rel;
    Rational rhs;
    int source;  // original constraint id, or -1 for an upper-bound row
  };
  std::vector<StdRow> std_rows;
  std_rows.reserve(static_cast<std::size_t>(program.constraint_count()));
  for (int i = 0; i < program.constraint_count(); ++i) {
    const auto& c = program.constraints()[static_cast<std::size_t>(i)];
    StdRow r{{}, c.relation, c.rhs, i};
    for (const auto& t : c.row) {
      r.rhs -= t.coef * bounds.lower[static_cast<std::size_t>(t.var)];
      const int col = column_of[static_cast<std::size_t>(t.var)];
      if (col >= 0) r.row.push_back(Entry{col, Num(t.coef)});
    }
    std_rows.push_back(std::move(r));
  }
  for (int k = 0; k < nstruct; ++k) {
    const int j = var_of[static_cast<std::size_t>(k)];
    const auto& up = bounds.upper[static_cast<std::size_t>(j)];
    if (!up) continue;
    std_rows.push_back(StdRow{{Entry{k, Num(1)}}, Relation::LessEqual, *up - bounds.lower[static_cast<std::size_t>(j)], -1});
  }

  // Empty rows are either trivially satisfied or make the program infeasible.
  const std::size_t m_all = std_rows.size();
  std::vector<char> live(m_all, 1);
  for (std::size_t i = 0; i < m_all; ++i) {
    if (!std_rows[i].row.empty()) continue;
    const auto& r = std_rows[i];
    const bool ok = (r.rel == Relation::LessEqual && r.rhs >= 0) || (r.rel == Relation::Equal && r.rhs == 0) ||
                    (r.rel == Relation::GreaterEqual && r.rhs <= 0);
    if (!ok) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    live[i] = 0;
  }

  // Column layout: [structural | slacks | artificials].
  Tableau tab;
  std::vector<int> row_sign;
  std::vector<int> unit_col;
  std::vector<int> row_source;
  std::vector<char> has_slack;
  int next_col = nstruct;
  std::vector<std::size_t> need_art;
  for (std::size_t i = 0; i < m_all; ++i) {
    if (!live[i]) continue;
    auto& r = std_rows[i];
    int sign = 1;
    int slack = -1;
    int slack_coef = 0;
    if (r.rel != Relation::Equal) {
      slack = next_col++;
      slack_coef = r.rel == Relation::LessEqual ? 1 : -1;
    }
    if (r.rhs < 0 || (r.rhs == 0 && r.rel == Relation::GreaterEqual)) sign = -1;
    SparseRow row = std::move(r.row);
    if (slack >= 0) row.push_back(Entry{slack, Num(slack_coef)});
    Rational b = r.rhs;
    if (sign < 0) {
      for (auto& e : row) e.val = -e.val;
      b = -b;
    }
    tab.rows.push_back(std::move(row));
    tab.rhs.push_back(Num(b));
    has_slack.push_back(slack >= 0);
    row_sign.push_back(sign);
    row_source.push_back(r.source);
    if (slack >= 0 && slack_coef * sign == 1) {
      tab.basis.push_back(slack);
      unit_col.push_back(slack);
    } else {
      tab.basis.push_back(-1);
      unit_col.push_back(-1);
      need_art.push_back(tab.rows.size() - 1);
    }
  }
  const int first_art = next_col;
  for (std::size_t i : need_art) {
    const int art = next_col++;
    tab.rows[i].push_back(Entry{art, Num(1)});
    tab.basis[i] = art;
    unit_col[i] = art;
  }
  tab.cols = next_col;
  tab.may_enter.assign(static_cast<std::size_t>(tab.cols), 1);
  for (int c = first_art; c < tab.cols; ++c) tab.may_enter[static_cast<std::size_t>(c)] = 0;

  const bool maximize = program.sense() == Sense::Maximize;
  std::vector<Num> cost(static_cast<std::size_t>(tab.cols), Num(0));
  for (const auto& t : program.objective()) {
    const int col = column_of[static_cast<std::size_t>(t.var)];
    if (col >= 0) cost[static_cast<std::size_t>(col)] = Num(maximize ? Rational(-t.coef) : t.coef);
  }

  bool certified = false;
  long guide_pivots = 0;
  if (options.float_guide && !tab.rows.empty()) {
    const auto basis = float_basis(tab, cost, first_art, has_slack, options.max_pivots, deadline, guide_pivots);
    if (basis) certified = certify_basis(tab, *basis, cost, first_art);
    if (basis && !certified) {
      Tableau saved = tab;
      if (!warm_start(tab, *basis)) tab = std::move(saved);
    }
  }

  // Phase 1.
  if (!certified && !need_art.empty()) {
    std::vector<Num> phase1(static_cast<std::size_t>(tab.cols), Num(0));
    for (int c = first_art; c < tab.cols; ++c) phase1[static_cast<std::size_t>(c)] = Num(1);
    tab.set_costs(phase1);
    const auto res = tab.run(options, deadline);
    sol.pivots = tab.pivots + guide_pivots;
    if (res == PhaseResult::Budget) {
      sol.status = SolveStatus::BudgetExceeded;
      return sol;
    }
    if (tab.value.sign() > 0) {
      sol.status = SolveStatus::Infeasible;
      return sol;
    }
    // Drive zero-level artificials out where a real column can replace them.
    for (std::size_t i = 0; i < tab.rows.size(); ++i) {
      if (tab.basis[i] < first_art) continue;
      int col = -1;
      for (const auto& e : tab.rows[i]) {
        if (e.col < first_art) {
          col = e.col;
          break;
        }
      }
      if (col >= 0) tab.pivot(i, col);
    }
  }

  // Phase 2.
  if (!certified) {
    tab.set_costs(cost);
    const auto res = tab.run(options, deadline);
    if (res == PhaseResult::Budget) {
      sol.pivots = tab.pivots + guide_pivots;
      sol.status = SolveStatus::BudgetExceeded;
      return sol;
    }
    if (res == PhaseResult::Unbounded) {
      sol.pivots = tab.pivots + guide_pivots;
      sol.status = SolveStatus::Unbounded;
      return sol;
    }
  }
  sol.pivots = tab.pivots + guide_pivots;

  sol.status = SolveStatus::Optimal;
  sol.values.assign(static_cast<std::size_t>(nvars), Rational(0));
  for (int j = 0; j < nvars; ++j) sol.values[static_cast<std::size_t>(j)] = bounds.lower[static_cast<std::size_t>(j)];
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    const int col = tab.basis[i];
    if (col < nstruct) sol.values[static_cast<std::size_t>(var_of[static_cast<std::size_t>(col)])] += tab.rhs[i].to_rational();
  }
  sol.objective = program.objective_value(sol.values);

  sol.duals.assign(static_cast<std::size_t>(program.constraint_count()), Rational(0));
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    if (row_source[i] < 0) continue;
    Rational y = -tab.reduced[static_cast<std::size_t>(unit_col[i])].to_rational();
    if (row_sign[i] < 0) y = -y;
    if (maximize) y = -y;
    sol.duals[static_cast<std::size_t>(row_source[i])] = y;
  }
  return sol;
}

}  // namespace detail

Solution solve_lp(const ConstraintProgram& program, const SolveOptions& options) {
  return detail::solve_relaxation(program, detail::program_bounds(program), options, detail::deadline_from(options));
}

std::vector<std::string> verify_dual_certificate(const ConstraintProgram& program, const Solution& solution) {
  std::vector<std::string> out;
  if (!solution.optimal()) return {"solution is not optimal"};
  if (solution.duals.size() != program.constraints().size()) return {"dual vector has the wrong length"};
  const bool maximize = program.sense() == Sense::Maximize;
  // Work in the minimization orientation.
  std::vector<Rational> reduced(static_cast<std::size_t>(program.variable_count()), Rational(0));
  for (const auto& t : program.objective()) reduced[static_cast<std::size_t>(t.var)] = maximize ? -t.coef : t.coef;
  Rational dual_obj = 0;
  for (std::size_t i = 0; i < program.constraints().size(); ++i) {
    const auto& c = program.constraints()[i];
    const Rational y = maximize ? -solution.duals[i] : solution.duals[i];
    if (c.relation == Relation::LessEqual && y > 0) out.push_back("row " + std::to_string(i) + ": <= row with positive multiplier");
    if (c.relation == Relation::GreaterEqual && y < 0) out.push_back("row " + std::to_string(i) + ": >= row with negative multiplier");
    dual_obj += y * c.rhs;
    for (const auto& t : c.row) reduced[static_cast<std::size_t>(t.var)] -= y * t.coef;
  }
  for (int j = 0; j < program.variable_count(); ++j) {
    const auto& v = program.variable(j);
    const Rational& r = reduced[static_cast<std::size_t>(j)];
    if (r > 0) {
      dual_obj += r * v.lower;
    } else if (r < 0) {
      if (!v.upper) {
        out.push_back(v.name + ": negative reduced cost on a variable without upper bound");
        continue;
      }
      dual_obj += r * *v.upper;
    }
  }
  const Rational primal = maximize ? -solution.objective : solution.objective;
  if (dual_obj != primal) out.push_back("dual objective " + to_string(dual_obj) + " != primal " + to_string(primal));
  return out;
}

}  // namespace pssr
