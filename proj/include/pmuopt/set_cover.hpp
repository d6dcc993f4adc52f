#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <vector>

#include "pmuopt/errors.hpp"
#include "pmuopt/observability.hpp"

namespace pmuopt {

// Exact minimum-cardinality set cover by depth-first branch and bound:
// LP-relaxation lower bounds (simplex on the dual, so any intermediate
// basis already certifies a bound), greedy upper bounds, dominance
// preprocessing and deterministic lowest-index tie-breaking throughout.

struct MinCoverOptions {
  long node_budget = 50'000'000;
  int lp_iteration_cap = 400;
};

struct MinCoverResult {
  int optimum = 0;                 // proven optimal cover size (if proven)
  std::vector<int> witness;        // chosen column indices, sorted
  double lower_bound = 0.0;        // final proven lower bound
  long nodes_explored = 0;
  bool proven = true;              // false only on node-budget exhaustion
  double wall_seconds = 0.0;
};

namespace cover_detail {

using Bitset = std::vector<std::uint64_t>;

inline Bitset make_bitset(int bits) { return Bitset((bits + 63) / 64, 0); }
inline void set_bit(Bitset& b, int i) { b[i >> 6] |= (1ULL << (i & 63)); }
inline bool test_bit(const Bitset& b, int i) { return (b[i >> 6] >> (i & 63)) & 1ULL; }

inline bool is_subset(const Bitset& a, const Bitset& b) {  // a subset of b
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

struct Instance {
  int n_cols = 0;
  std::vector<std::vector<int>> row_cols;   // columns covering each row
  std::vector<std::vector<int>> col_rows;   // rows covered by each column
};

// LP bound on the residual covering problem, computed as a primal simplex
// on the dual  max 1'y : A^T y <= 1, y >= 0.  Any feasible iterate gives a
// valid lower bound, so the iteration cap never compromises soundness.
// Also returns the primal x estimate (shadow prices) for branching.
struct LpOutcome {
  double bound = 0.0;
  bool optimal = false;
  std::vector<double> primal_x;   // size = #active columns
};

class DualSimplex {
 public:
  LpOutcome solve(const std::vector<std::vector<int>>& active_rows_cols,
                  const std::vector<int>& col_of, int n_active_cols,
                  int iteration_cap) {
    const int n_rows = static_cast<int>(active_rows_cols.size());
    const int m = n_active_cols;           // dual constraints (one per column)
    const int total = n_rows + m;          // y vars + slacks
    tableau_.assign(static_cast<std::size_t>(m + 1) * (total + 1), 0.0);
    basis_.resize(m);
    const auto idx = [&](int r, int c) { return static_cast<std::size_t>(r) * (total + 1) + c; };

    for (int c = 0; c < m; ++c) {
      tableau_[idx(c, n_rows + c)] = 1.0;
      tableau_[idx(c, total)] = 1.0;
      basis_[c] = n_rows + c;
    }
    for (int r = 0; r < n_rows; ++r)
      for (int col : active_rows_cols[r]) tableau_[idx(col_of[col], r)] = 1.0;
    for (int r = 0; r < n_rows; ++r) tableau_[idx(m, r)] = -1.0;  // maximize sum(y)

    LpOutcome outcome;
    int stalled = 0;
    for (int iter = 0; iter < iteration_cap; ++iter) {
      // Entering column: most negative reduced cost (Bland's rule after a
      // stall, to break degenerate cycling).
      int enter = -1;
      if (stalled < 40) {
        double best = -1e-9;
        for (int c = 0; c < total; ++c)
          if (tableau_[idx(m, c)] < best) {
            best = tableau_[idx(m, c)];
            enter = c;
          }
      } else {
        for (int c = 0; c < total; ++c)
          if (tableau_[idx(m, c)] < -1e-9) {
            enter = c;
            break;
          }
      }
      if (enter < 0) {
        outcome.optimal = true;
        break;
      }
      int leave = -1;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (int r = 0; r < m; ++r) {
        const double a = tableau_[idx(r, enter)];
        if (a > 1e-11) {
          const double ratio = tableau_[idx(r, total)] / a;
          if (ratio < best_ratio - 1e-12 ||
              (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[r] < basis_[leave]))) {
            best_ratio = ratio;
            leave = r;
          }
        }
      }
      if (leave < 0) break;  // unbounded cannot happen for a covering dual
      stalled = best_ratio < 1e-12 ? stalled + 1 : 0;
      pivot(enter, leave, m, total, idx);
    }
    outcome.bound = tableau_[idx(m, total)];
    outcome.primal_x.resize(m);
    for (int c = 0; c < m; ++c) outcome.primal_x[c] = tableau_[idx(m, n_rows + c)];
    return outcome;
  }

 private:
  template <typename Idx>
  void pivot(int enter, int leave, int m, int total, const Idx& idx) {
    const double pivot_value = tableau_[idx(leave, enter)];
    for (int c = 0; c <= total; ++c) tableau_[idx(leave, c)] /= pivot_value;
    for (int r = 0; r <= m; ++r) {
      if (r == leave) continue;
      const double factor = tableau_[idx(r, enter)];
      if (factor == 0.0) continue;
      for (int c = 0; c <= total; ++c) tableau_[idx(r, c)] -= factor * tableau_[idx(leave, c)];
    }
    basis_[leave] = enter;
  }

  std::vector<double> tableau_;
  std::vector<int> basis_;
};

struct SearchState {
  const Instance* instance = nullptr;
  MinCoverOptions options;
  long nodes = 0;
  bool budget_hit = false;
  int incumbent_size = std::numeric_limits<int>::max();
  std::vector<int> incumbent;
  double root_bound = 0.0;
};

inline std::vector<int> greedy_completion(const Instance& inst,
                                          std::vector<char> row_done,
                                          const std::vector<char>& col_dead,
                                          int rows_left) {
  std::vector<int> picked;
  std::vector<int> gain(inst.n_cols, 0);
  for (int c = 0; c < inst.n_cols; ++c) {
    if (col_dead[c]) continue;
    for (int r : inst.col_rows[c])
      if (!row_done[r]) ++gain[c];
  }
  while (rows_left > 0) {
    int best = -1;
    for (int c = 0; c < inst.n_cols; ++c) {
      if (col_dead[c] || gain[c] == 0) continue;
      if (best < 0 || gain[c] > gain[best]) best = c;
    }
    if (best < 0) return {};  // uncoverable
    picked.push_back(best);
    for (int r : inst.col_rows[best]) {
      if (row_done[r]) continue;
      row_done[r] = 1;
      --rows_left;
      for (int c2 : inst.row_cols[r])
        if (!col_dead[c2]) --gain[c2];
    }
  }
  return picked;
}

inline void dfs(SearchState& state, std::vector<char> row_done, std::vector<char> col_dead,
                std::vector<int> chosen, int rows_left) {
  const Instance& inst = *state.instance;
  if (++state.nodes > state.options.node_budget) {
    state.budget_hit = true;
    return;
  }

  // Unit-row propagation: forced columns, infeasible rows.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int r = 0; r < static_cast<int>(inst.row_cols.size()) && rows_left > 0; ++r) {
      if (row_done[r]) continue;
      int alive = 0, only = -1;
      for (int c : inst.row_cols[r]) {
        if (!col_dead[c]) {
          ++alive;
          if (alive == 1) only = c; else break;
        }
      }
      if (alive == 0) return;  // dead branch
      if (alive == 1) {
        chosen.push_back(only);
        col_dead[only] = 1;
        for (int rr : inst.col_rows[only])
          if (!row_done[rr]) {
            row_done[rr] = 1;
            --rows_left;
          }
        if (static_cast<int>(chosen.size()) >= state.incumbent_size) return;
        changed = true;
      }
    }
  }

  if (rows_left == 0) {
    if (static_cast<int>(chosen.size()) < state.incumbent_size) {
      state.incumbent_size = static_cast<int>(chosen.size());
      state.incumbent = chosen;
    }
    return;
  }
  if (static_cast<int>(chosen.size()) + 1 >= state.incumbent_size) return;

  // Combinatorial bound: ceil(rows_left / best coverage).
  int max_cover = 0;
  for (int c = 0; c < inst.n_cols; ++c) {
    if (col_dead[c]) continue;
    int cover = 0;
    for (int r : inst.col_rows[c])
      if (!row_done[r]) ++cover;
    max_cover = std::max(max_cover, cover);
  }
  if (max_cover == 0) return;
  int bound = (rows_left + max_cover - 1) / max_cover;
  if (static_cast<int>(chosen.size()) + bound >= state.incumbent_size) return;

  // Greedy completion refreshes the incumbent cheaply.
  std::vector<int> greedy = greedy_completion(inst, row_done, col_dead, rows_left);
  if (!greedy.empty() &&
      static_cast<int>(chosen.size() + greedy.size()) < state.incumbent_size) {
    state.incumbent_size = static_cast<int>(chosen.size() + greedy.size());
    state.incumbent = chosen;
    state.incumbent.insert(state.incumbent.end(), greedy.begin(), greedy.end());
    if (static_cast<int>(chosen.size()) + bound >= state.incumbent_size) return;
  }

  // LP bound on the residual problem.
  std::vector<int> col_of(inst.n_cols, -1);
  std::vector<int> active_cols;
  for (int c = 0; c < inst.n_cols; ++c)
    if (!col_dead[c]) {
      col_of[c] = static_cast<int>(active_cols.size());
      active_cols.push_back(c);
    }
  std::vector<std::vector<int>> active_rows;
  active_rows.reserve(rows_left);
  for (int r = 0; r < static_cast<int>(inst.row_cols.size()); ++r) {
    if (row_done[r]) continue;
    std::vector<int> cols;
    for (int c : inst.row_cols[r])
      if (!col_dead[c]) cols.push_back(c);
    active_rows.push_back(std::move(cols));
  }
  DualSimplex simplex;
  LpOutcome lp = simplex.solve(active_rows, col_of, static_cast<int>(active_cols.size()),
                               state.options.lp_iteration_cap);
  const int lp_bound = static_cast<int>(std::ceil(lp.bound - 1e-6));
  bound = std::max(bound, lp_bound);
  if (static_cast<int>(chosen.size()) + bound >= state.incumbent_size) return;

  // Integral LP optimum solves this node outright.
  if (lp.optimal) {
    bool integral = true;
    for (double v : lp.primal_x)
      if (v > 1e-6 && v < 1.0 - 1e-6) {
        integral = false;
        break;
      }
    if (integral) {
      std::vector<int> solution = chosen;
      for (std::size_t i = 0; i < lp.primal_x.size(); ++i)
        if (lp.primal_x[i] > 0.5) solution.push_back(active_cols[i]);
      // Shadow prices can be degenerate; accept only verified covers.
      std::vector<char> done = row_done;
      int left = rows_left;
      for (std::size_t i = 0; i < lp.primal_x.size(); ++i)
        if (lp.primal_x[i] > 0.5)
          for (int r : inst.col_rows[active_cols[i]])
            if (!done[r]) {
              done[r] = 1;
              --left;
            }
      if (left == 0) {
        if (static_cast<int>(solution.size()) < state.incumbent_size) {
          state.incumbent_size = static_cast<int>(solution.size());
          state.incumbent = solution;
        }
        return;
      }
    }
  }

  // Branch variable: most fractional LP value, ties by coverage then index.
  int branch_col = -1;
  double best_frac = -1.0;
  int best_cover = -1;
  for (std::size_t i = 0; i < active_cols.size(); ++i) {
    const int c = active_cols[i];
    int cover = 0;
    for (int r : inst.col_rows[c])
      if (!row_done[r]) ++cover;
    if (cover == 0) continue;
    const double frac = std::min(lp.primal_x[i], 1.0 - std::min(lp.primal_x[i], 1.0));
    if (frac > best_frac + 1e-9 ||
        (frac > best_frac - 1e-9 && cover > best_cover)) {
      best_frac = frac;
      best_cover = cover;
      branch_col = c;
    }
  }
  if (branch_col < 0) return;

  // Include branch first.
  {
    std::vector<char> row2 = row_done;
    std::vector<char> col2 = col_dead;
    std::vector<int> chosen2 = chosen;
    int left = rows_left;
    chosen2.push_back(branch_col);
    col2[branch_col] = 1;
    for (int r : inst.col_rows[branch_col])
      if (!row2[r]) {
        row2[r] = 1;
        --left;
      }
    dfs(state, std::move(row2), std::move(col2), std::move(chosen2), left);
  }
  // Exclude branch.
  {
    std::vector<char> col2 = col_dead;
    col2[branch_col] = 1;
    dfs(state, row_done, std::move(col2), chosen, rows_left);
  }
}

}  // namespace cover_detail

// Exact minimum-PMU solve of "matrix * x >= 1, x binary". Returns a proven
// optimum with one witness (lowest-index deterministic tie-breaking).
inline MinCoverResult min_pmu_blp(const ObservabilityConstraint& constraint,
                                  const MinCoverOptions& options = {}) {
  using namespace cover_detail;
  const auto t0 = std::chrono::steady_clock::now();
  const int n_rows_raw = constraint.rows();
  const int n_cols = static_cast<int>(constraint.matrix.cols());
  if (n_rows_raw == 0) {
    MinCoverResult empty;
    empty.wall_seconds = 0.0;
    return empty;
  }

  // Row support sets; uncoverable rows fail immediately.
  std::vector<Bitset> row_sets;
  std::vector<std::vector<int>> raw_rows(n_rows_raw);
  for (int r = 0; r < n_rows_raw; ++r) {
    Bitset bits = make_bitset(n_cols);
    for (int c = 0; c < n_cols; ++c)
      if (constraint.matrix(r, c) > 0) {
        raw_rows[r].push_back(c);
        set_bit(bits, c);
      }
    if (raw_rows[r].empty())
      throw InfeasibleError("constraint row " + std::to_string(r) + " cannot be covered");
    row_sets.push_back(std::move(bits));
  }

  // Row dominance: keep only minimal rows (a superset row is implied).
  std::vector<int> keep_rows;
  for (int r = 0; r < n_rows_raw; ++r) {
    bool dominated = false;
    for (int s = 0; s < n_rows_raw && !dominated; ++s) {
      if (s == r) continue;
      if (is_subset(row_sets[s], row_sets[r])) {
        const bool equal = is_subset(row_sets[r], row_sets[s]);
        dominated = !equal || s < r;  // for duplicates keep the first
      }
    }
    if (!dominated) keep_rows.push_back(r);
  }

  // Column dominance: drop any column whose row set is contained in
  // another's (ties keep the lowest index).
  const int n_kept = static_cast<int>(keep_rows.size());
  std::vector<Bitset> col_sets(n_cols, make_bitset(n_kept));
  for (int i = 0; i < n_kept; ++i)
    for (int c : raw_rows[keep_rows[i]]) set_bit(col_sets[c], i);
  std::vector<char> col_removed(n_cols, 0);
  for (int c = 0; c < n_cols; ++c) {
    for (int d = 0; d < n_cols && !col_removed[c]; ++d) {
      if (d == c || col_removed[d]) continue;
      if (is_subset(col_sets[c], col_sets[d])) {
        const bool equal = is_subset(col_sets[d], col_sets[c]);
        if (!equal || d < c) col_removed[c] = 1;
      }
    }
  }

  Instance inst;
  inst.n_cols = n_cols;
  inst.col_rows.resize(n_cols);
  inst.row_cols.resize(n_kept);
  for (int i = 0; i < n_kept; ++i)
    for (int c : raw_rows[keep_rows[i]])
      if (!col_removed[c]) {
        inst.row_cols[i].push_back(c);
        inst.col_rows[c].push_back(i);
      }

  SearchState state;
  state.instance = &inst;
  state.options = options;

  std::vector<char> row_done(n_kept, 0);
  std::vector<char> col_dead(n_cols, 0);
  for (int c = 0; c < n_cols; ++c) col_dead[c] = col_removed[c];

  // Root incumbent from greedy.
  std::vector<int> greedy = greedy_completion(inst, row_done, col_dead, n_kept);
  if (greedy.empty()) throw InfeasibleError("covering problem is infeasible");
  state.incumbent_size = static_cast<int>(greedy.size());
  state.incumbent = greedy;

  dfs(state, row_done, col_dead, {}, n_kept);

  MinCoverResult result;
  result.optimum = state.incumbent_size;
  result.witness = state.incumbent;
  std::sort(result.witness.begin(), result.witness.end());
  result.nodes_explored = state.nodes;
  result.proven = !state.budget_hit;
  result.lower_bound = result.proven ? static_cast<double>(result.optimum)
                                     : state.root_bound;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace pmuopt
