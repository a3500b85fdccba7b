#pragma once
// Dense two-phase simplex for the small linear programs used by the decoy
// bound oracle:  minimize c.x  subject to  A x <= b,  x >= 0.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace qkdsim {

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpResult {
  LpStatus status = LpStatus::Optimal;
  double objective = 0.0;
  std::vector<double> x;
};

namespace detail {

class SimplexTableau {
 public:
  SimplexTableau(const std::vector<std::vector<double>>& a,
                 const std::vector<double>& b, std::size_t n_structural)
      : m_(a.size()), n_struct_(n_structural) {
    // columns: structural | slack (one per row) | artificial (added lazily) | rhs
    n_total_ = n_struct_ + m_;
    rows_.assign(m_, std::vector<double>(n_total_ + 1, 0.0));
    basis_.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_struct_; ++j) rows_[i][j] = a[i][j];
      rows_[i][n_struct_ + i] = 1.0;
      rows_[i].back() = b[i];
      basis_[i] = n_struct_ + i;
    }
    // rows with negative rhs need an artificial basis variable
    for (std::size_t i = 0; i < m_; ++i) {
      if (rows_[i].back() < 0.0) {
        for (auto& v : rows_[i]) v = -v;
        add_artificial(i);
      }
    }
  }

  LpStatus run_two_phase(const std::vector<double>& c_structural) {
    if (!artificial_.empty()) {
      std::vector<double> phase1(n_total_, 0.0);
      for (std::size_t j : artificial_) phase1[j] = 1.0;
      LpStatus s = iterate(phase1);
      if (s != LpStatus::Optimal) return LpStatus::Infeasible;
      if (objective_value(phase1) > 1e-7) return LpStatus::Infeasible;
      purge_artificials();
    }
    std::vector<double> c(n_total_, 0.0);
    for (std::size_t j = 0; j < n_struct_ && j < c_structural.size(); ++j)
      c[j] = c_structural[j];
    return iterate(c);
  }

  double objective_value(const std::vector<double>& c) const {
    double v = 0.0;
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < c.size()) v += c[basis_[i]] * rows_[i].back();
    return v;
  }

  std::vector<double> solution() const {
    std::vector<double> x(n_struct_, 0.0);
    for (std::size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_struct_) x[basis_[i]] = rows_[i].back();
    return x;
  }

 private:
  void add_artificial(std::size_t row) {
    ++n_total_;
    for (auto& r : rows_) r.insert(r.end() - 1, 0.0);
    rows_[row][n_total_ - 1] = 1.0;
    basis_[row] = n_total_ - 1;
    artificial_.push_back(n_total_ - 1);
    blocked_.resize(n_total_, false);
  }

  bool is_artificial(std::size_t j) const {
    return j < blocked_.size() && blocked_[j];
  }

  // After phase 1: forbid artificial columns, pivot basic artificials out.
  void purge_artificials() {
    blocked_.assign(n_total_, false);
    for (std::size_t j : artificial_) blocked_[j] = true;
    for (std::size_t i = 0; i < m_; ++i) {
      if (!is_artificial(basis_[i])) continue;
      std::size_t enter = n_total_;
      for (std::size_t j = 0; j < n_total_; ++j)
        if (!is_artificial(j) && std::fabs(rows_[i][j]) > 1e-9) { enter = j; break; }
      if (enter == n_total_) {
        // redundant constraint: zero the row so it never pivots again
        for (auto& v : rows_[i]) v = 0.0;
        continue;
      }
      pivot(i, enter);
    }
  }

  LpStatus iterate(const std::vector<double>& c) {
    const double tol = 1e-9;
    const std::size_t max_iter = 200 * (m_ + n_total_);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      // reduced costs, Bland's rule: first negative index enters
      std::size_t enter = n_total_;
      for (std::size_t j = 0; j < n_total_; ++j) {
        if (is_artificial(j) && c[j] == 0.0) continue;
        double r = c[j];
        for (std::size_t i = 0; i < m_; ++i)
          if (c[basis_[i]] != 0.0 && rows_[i][j] != 0.0)
            r -= c[basis_[i]] * rows_[i][j];
        if (r < -tol) { enter = j; break; }
      }
      if (enter == n_total_) return LpStatus::Optimal;
      // ratio test, ties broken by smallest basis index
      std::size_t leave = m_;
      double best = 0.0;
      for (std::size_t i = 0; i < m_; ++i) {
        if (rows_[i][enter] <= tol) continue;
        double ratio = rows_[i].back() / rows_[i][enter];
        if (leave == m_ || ratio < best - 1e-15 ||
            (std::fabs(ratio - best) <= 1e-15 && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m_) return LpStatus::Unbounded;
      pivot(leave, enter);
    }
    throw std::runtime_error("simplex: iteration limit exceeded");
  }

  void pivot(std::size_t row, std::size_t col) {
    double p = rows_[row][col];
    for (auto& v : rows_[row]) v /= p;
    rows_[row][col] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == row) continue;
      double f = rows_[i][col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= n_total_; ++j) rows_[i][j] -= f * rows_[row][j];
      rows_[i][col] = 0.0;
    }
    basis_[row] = col;
  }

  std::size_t m_;
  std::size_t n_struct_;
  std::size_t n_total_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> artificial_;
  std::vector<bool> blocked_;
};

} // namespace detail

/// Minimize c.x subject to A x <= b, x >= 0.
inline LpResult solve_lp(const std::vector<std::vector<double>>& a,
                         const std::vector<double>& b,
                         const std::vector<double>& c) {
  if (a.size() != b.size()) throw std::invalid_argument("solve_lp: A and b size mismatch");
  for (const auto& row : a)
    if (row.size() != c.size()) throw std::invalid_argument("solve_lp: row width mismatch");
  detail::SimplexTableau t(a, b, c.size());
  LpResult out;
  out.status = t.run_two_phase(c);
  if (out.status == LpStatus::Optimal) {
    out.x = t.solution();
    out.objective = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) out.objective += c[j] * out.x[j];
  }
  return out;
}

} // namespace qkdsim
