#pragma once

// Dense bounded-variable primal simplex.
//
// Rows are turned into equalities with one slack each (bounds by sense),
// and an artificial is added only for rows whose slack cannot absorb the
// initial residual. Phase 1 minimises the artificials, phase 2 the real
// objective with the artificials fixed at zero. Pricing is Dantzig's rule;
// after a run of degenerate pivots it switches to Bland's rule until the
// objective moves again, which rules out cycling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "mms/error.hpp"

namespace mms {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { kLe, kGe, kEq };

struct LinearProgram {
  bool maximize = false;
  std::vector<double> objective;
  std::vector<double> lower;
  std::vector<double> upper;
  // Dense rows; a row shorter than the variable count is zero-padded.
  std::vector<std::vector<double>> rows;
  std::vector<RowSense> senses;
  std::vector<double> rhs;

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }

  int add_variable(double cost, double lo = 0.0, double hi = kInf) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    return num_vars() - 1;
  }

  int add_row(std::vector<double> coeffs, RowSense sense, double b) {
    rows.push_back(std::move(coeffs));
    senses.push_back(sense);
    rhs.push_back(b);
    return num_rows() - 1;
  }

  int add_sparse_row(const std::vector<std::pair<int, double>>& terms, RowSense sense, double b) {
    std::vector<double> coeffs(num_vars(), 0.0);
    for (const auto& [j, a] : terms) coeffs.at(j) += a;
    return add_row(std::move(coeffs), sense, b);
  }
};

enum class LPStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

inline const char* to_string(LPStatus s) {
  switch (s) {
    case LPStatus::kOptimal: return "optimal";
    case LPStatus::kInfeasible: return "infeasible";
    case LPStatus::kUnbounded: return "unbounded";
    case LPStatus::kIterationLimit: return "iteration_limit";
  }
  return "?";
}

struct LPResult {
  LPStatus status = LPStatus::kInfeasible;
  std::vector<double> x;
  // Row duals: the derivative of the optimal objective with respect to rhs.
  std::vector<double> duals;
  double objective = 0.0;
  std::int64_t iterations = 0;
};

struct LPOptions {
  double pivot_tol = 1e-9;
  double optimality_tol = 1e-7;
  double feasibility_tol = 1e-7;
  int degenerate_streak = 50;
  std::int64_t max_iterations = 1'000'000;
};

namespace detail {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LPOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    if (static_cast<int>(lp.lower.size()) != n_ || static_cast<int>(lp.upper.size()) != n_ ||
        static_cast<int>(lp.senses.size()) != m_ || static_cast<int>(lp.rhs.size()) != m_) {
      throw InvalidInput("linear program: inconsistent dimensions");
    }
    for (const auto& row : lp.rows) {
      if (static_cast<int>(row.size()) > n_) throw InvalidInput("linear program: row too long");
    }
    for (int j = 0; j < n_; ++j) {
      if (lp.lower[j] > lp.upper[j]) infeasible_bounds_ = true;
    }
  }

  LPResult run() {
    LPResult res;
    if (infeasible_bounds_) return res;
    build();
    if (num_art_ > 0) {
      std::vector<double> cost(cols_, 0.0);
      for (int j = first_art(); j < cols_; ++j) cost[j] = 1.0;
      set_costs(cost);
      const LPStatus st = iterate(res.iterations);
      if (st == LPStatus::kIterationLimit) {
        res.status = st;
        return res;
      }
      refresh_basic_values();
      double infeas = 0.0;
      for (int j = first_art(); j < cols_; ++j) infeas += x_[j];
      double scale = 1.0;
      for (double b : lp_.rhs) scale = std::max(scale, std::abs(b));
      if (infeas > opt_.feasibility_tol * scale) return res;
      for (int j = first_art(); j < cols_; ++j) {
        lo_[j] = 0.0;
        hi_[j] = 0.0;
        if (pos_[j] < 0) x_[j] = 0.0;
      }
    }
    std::vector<double> cost(cols_, 0.0);
    const double sign = lp_.maximize ? -1.0 : 1.0;
    for (int j = 0; j < n_; ++j) cost[j] = sign * lp_.objective[j];
    set_costs(cost);
    res.status = iterate(res.iterations);
    if (res.status != LPStatus::kOptimal) return res;
    refresh_basic_values();

    res.x.assign(x_.begin(), x_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      // Snap tiny bound violations left over from floating point.
      res.x[j] = std::clamp(res.x[j], lp_.lower[j], lp_.upper[j]);
      res.objective += lp_.objective[j] * res.x[j];
    }
    res.duals.resize(m_);
    for (int i = 0; i < m_; ++i) res.duals[i] = -sign * d_[n_ + i];
    return res;
  }

 private:
  int first_art() const { return n_ + m_; }
  double& tab(int i, int j) { return tab_[static_cast<std::size_t>(i) * cols_ + j]; }
  double a(int i, int j) const {
    const auto& row = lp_.rows[i];
    return j < static_cast<int>(row.size()) ? row[j] : 0.0;
  }

  void build() {
    // Structural variables start at a finite bound (0 when free).
    x_.assign(n_ + m_, 0.0);
    lo_.assign(n_ + m_, 0.0);
    hi_.assign(n_ + m_, 0.0);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp_.lower[j];
      hi_[j] = lp_.upper[j];
      x_[j] = std::isfinite(lo_[j]) ? lo_[j] : (std::isfinite(hi_[j]) ? hi_[j] : 0.0);
    }
    std::vector<double> resid(m_);
    std::vector<int> art_sign(m_, 0);
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      switch (lp_.senses[i]) {
        case RowSense::kLe: lo_[s] = 0.0; hi_[s] = kInf; break;
        case RowSense::kGe: lo_[s] = -kInf; hi_[s] = 0.0; break;
        case RowSense::kEq: lo_[s] = 0.0; hi_[s] = 0.0; break;
      }
      double r = lp_.rhs[i];
      for (int j = 0; j < n_; ++j) r -= a(i, j) * x_[j];
      resid[i] = r;
      if (r < lo_[s] || r > hi_[s]) {
        art_sign[i] = r - std::clamp(r, lo_[s], hi_[s]) > 0 ? 1 : -1;
        ++num_art_;
      }
    }
    cols_ = n_ + m_ + num_art_;
    x_.resize(cols_, 0.0);
    lo_.resize(cols_, 0.0);
    hi_.resize(cols_, kInf);
    tab_.assign(static_cast<std::size_t>(m_) * cols_, 0.0);
    basis_.assign(m_, -1);
    pos_.assign(cols_, -1);
    rhs_.assign(lp_.rhs.begin(), lp_.rhs.end());
    art_col_.assign(m_, -1);
    art_coeff_.assign(m_, 0.0);
    int next_art = first_art();
    for (int i = 0; i < m_; ++i) {
      const int s = n_ + i;
      for (int j = 0; j < n_; ++j) tab(i, j) = a(i, j);
      tab(i, s) = 1.0;
      if (art_sign[i] == 0) {
        x_[s] = resid[i];
        basis_[i] = s;
      } else {
        const int art = next_art++;
        x_[s] = std::clamp(resid[i], lo_[s], hi_[s]);
        x_[art] = std::abs(resid[i] - x_[s]);
        tab(i, art) = static_cast<double>(art_sign[i]);
        art_col_[i] = art;
        art_coeff_[i] = static_cast<double>(art_sign[i]);
        art_row_.push_back(i);
        if (art_sign[i] < 0) {
          for (int j = 0; j < cols_; ++j) tab(i, j) = -tab(i, j);
        }
        basis_[i] = art;
      }
      pos_[basis_[i]] = i;
    }
  }

  void set_costs(const std::vector<double>& cost) {
    cost_ = cost;
    d_.assign(cols_, 0.0);
    for (int j = 0; j < cols_; ++j) {
      if (pos_[j] >= 0) continue;
      double v = cost[j];
      for (int i = 0; i < m_; ++i) v -= cost[basis_[i]] * tab(i, j);
      d_[j] = v;
    }
  }

  // Recomputes basic values from the nonbasic ones: x_B = B^-1 (b - N x_N),
  // where column n_+i of the tableau holds B^-1 e_i.
  void refresh_basic_values() {
    std::vector<double> r(rhs_);
    for (int j = 0; j < cols_; ++j) {
      if (pos_[j] >= 0 || x_[j] == 0.0) continue;
      if (j < n_) {
        for (int i = 0; i < m_; ++i) r[i] -= a(i, j) * x_[j];
      } else if (j < n_ + m_) {
        r[j - n_] -= x_[j];
      } else {
        const int row = art_row_[j - first_art()];
        r[row] -= art_coeff_[row] * x_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v += tab(i, n_ + k) * r[k];
      x_[basis_[i]] = v;
    }
  }

  LPStatus iterate(std::int64_t& iterations) {
    bool bland = false;
    int degenerate = 0;
    std::vector<double> col(m_);
    std::int64_t since_refresh = 0;
    while (true) {
      if (iterations >= opt_.max_iterations) return LPStatus::kIterationLimit;
      // Pricing.
      int enter = -1;
      double dir = 0.0;
      double best = 0.0;
      for (int j = 0; j < cols_; ++j) {
        if (pos_[j] >= 0) continue;
        const double dj = d_[j];
        double score = 0.0;
        double dj_dir = 0.0;
        if (dj < -opt_.optimality_tol && x_[j] < hi_[j]) {
          score = -dj;
          dj_dir = 1.0;
        } else if (dj > opt_.optimality_tol && x_[j] > lo_[j]) {
          score = dj;
          dj_dir = -1.0;
        } else {
          continue;
        }
        if (bland) {
          enter = j;
          dir = dj_dir;
          break;
        }
        if (score > best) {
          best = score;
          enter = j;
          dir = dj_dir;
        }
      }
      if (enter < 0) return LPStatus::kOptimal;

      // Ratio test.
      for (int i = 0; i < m_; ++i) col[i] = tab(i, enter);
      double step = hi_[enter] - lo_[enter];  // bound flip
      int leave = -1;
      bool leave_to_upper = false;
      double leave_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double ai = col[i];
        if (std::abs(ai) < opt_.pivot_tol) continue;
        const int b = basis_[i];
        const double rate = -dir * ai;
        double lim;
        bool to_upper;
        if (rate < 0.0) {
          if (!std::isfinite(lo_[b])) continue;
          lim = (x_[b] - lo_[b]) / -rate;
          to_upper = false;
        } else {
          if (!std::isfinite(hi_[b])) continue;
          lim = (hi_[b] - x_[b]) / rate;
          to_upper = true;
        }
        lim = std::max(lim, 0.0);
        bool take = lim < step - 1e-12;
        if (!take && leave >= 0 && std::abs(lim - step) <= 1e-12) {
          take = bland ? b < basis_[leave] : std::abs(ai) > std::abs(leave_pivot);
        }
        if (take) {
          step = lim;
          leave = i;
          leave_to_upper = to_upper;
          leave_pivot = ai;
        }
      }
      if (!std::isfinite(step)) return LPStatus::kUnbounded;
      ++iterations;

      x_[enter] += dir * step;
      for (int i = 0; i < m_; ++i) x_[basis_[i]] -= dir * step * col[i];
      if (step <= 1e-12) {
        if (++degenerate >= opt_.degenerate_streak) bland = true;
      } else {
        degenerate = 0;
        bland = false;
      }
      if (leave < 0) {
        x_[enter] = dir > 0 ? hi_[enter] : lo_[enter];
        continue;
      }
      const int out = basis_[leave];
      x_[out] = leave_to_upper ? hi_[out] : lo_[out];
      pivot(leave, enter);
      if (++since_refresh >= 200) {
        refresh_basic_values();
        since_refresh = 0;
      }
    }
  }

  void pivot(int r, int j) {
    const double p = tab(r, j);
    double* pr = &tab_[static_cast<std::size_t>(r) * cols_];
    for (int k = 0; k < cols_; ++k) pr[k] /= p;
    pr[j] = 1.0;
    for (int i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* row = &tab_[static_cast<std::size_t>(i) * cols_];
      const double f = row[j];
      if (f == 0.0) continue;
      for (int k = 0; k < cols_; ++k) row[k] -= f * pr[k];
      row[j] = 0.0;
    }
    const double f = d_[j];
    if (f != 0.0) {
      for (int k = 0; k < cols_; ++k) d_[k] -= f * pr[k];
      d_[j] = 0.0;
    }
    pos_[basis_[r]] = -1;
    basis_[r] = j;
    pos_[j] = r;
  }

  const LinearProgram& lp_;
  LPOptions opt_;
  int n_ = 0;
  int m_ = 0;
  int cols_ = 0;
  int num_art_ = 0;
  bool infeasible_bounds_ = false;
  std::vector<double> tab_;
  std::vector<double> x_, lo_, hi_, cost_, d_, rhs_;
  std::vector<int> basis_, pos_;
  // Per row: column and original coefficient (+1/-1) of its artificial.
  std::vector<int> art_col_;
  std::vector<int> art_row_;
  std::vector<double> art_coeff_;
};

}  // namespace detail

inline LPResult solve_lp(const LinearProgram& lp, const LPOptions& opt = {}) {
  detail::Simplex s(lp, opt);
  return s.run();
}

}  // namespace mms
