#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nodal/dense.hpp"

namespace nodal {

// Finite stand-in for "no upper bound". It takes part in ordinary
// arithmetic; a ratio-test step that reaches kUnboundedGuard is what
// gets reported as an unbounded problem.
inline constexpr double kUnbounded = 1e30;

enum class Relation { LessEqual, Equal };

struct LpRow {
    std::vector<double> coeffs;
    Relation relation = Relation::LessEqual;
    double rhs = 0.0;
};

// Maximization over box-bounded variables:
//   max objective.x  subject to  rows,  lower <= x <= upper.
// Lower bounds must be finite; upper bounds may be kUnbounded.
struct LinearProgram {
    std::vector<double> objective;
    std::vector<LpRow> rows;
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t num_vars() const { return objective.size(); }

    static LinearProgram with_vars(std::size_t n) {
        LinearProgram lp;
        lp.objective.assign(n, 0.0);
        lp.lower.assign(n, 0.0);
        lp.upper.assign(n, kUnbounded);
        return lp;
    }

    void add_le(std::vector<double> coeffs, double rhs) {
        rows.push_back({std::move(coeffs), Relation::LessEqual, rhs});
    }
    void add_eq(std::vector<double> coeffs, double rhs) {
        rows.push_back({std::move(coeffs), Relation::Equal, rhs});
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;        // per structural variable
    std::vector<double> row_duals;     // marginal objective per unit of row rhs
    std::vector<double> reduced_costs; // per structural variable
    double objective_value = 0.0;
    std::vector<std::size_t> infeasible_rows; // rows still violated after phase 1
};

struct KktReport {
    bool applicable = false;
    double max_primal_violation = 0.0;
    double max_dual_violation = 0.0;
    double max_slackness_violation = 0.0;
    double duality_gap = 0.0;
    bool pass = false;
};

struct FeasibilityCheck {
    bool feasible = false;
    double max_violation = 0.0;
};

namespace detail {

inline constexpr double kFeasTol = 1e-9;
inline constexpr double kPivotTol = 1e-9;
inline constexpr double kUnboundedGuard = 1e25;
inline constexpr int kStallLimit = 50; // degenerate steps before Bland's rule

inline void check_well_formed(const LinearProgram& lp) {
    const std::size_t n = lp.num_vars();
    if (n == 0) throw std::invalid_argument("lp: no variables");
    if (lp.lower.size() != n || lp.upper.size() != n)
        throw std::invalid_argument("lp: bounds size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(lp.lower[j]))
            throw std::invalid_argument("lp: lower bound must be finite");
        if (lp.lower[j] > lp.upper[j])
            throw std::invalid_argument("lp: lower > upper at variable " + std::to_string(j));
    }
    for (std::size_t i = 0; i < lp.rows.size(); ++i) {
        if (lp.rows[i].coeffs.size() != n)
            throw std::invalid_argument("lp: row " + std::to_string(i) + " length mismatch");
        if (!std::isfinite(lp.rows[i].rhs))
            throw std::invalid_argument("lp: row " + std::to_string(i) + " rhs not finite");
    }
}

// Bounded-variable primal simplex on a dense tableau. Columns are the
// structural variables, one slack per row, then one artificial per row
// whose initial slack value falls outside the slack bounds. Nonbasic
// variables rest at a bound; Dantzig pricing with ties broken by lowest
// column index, switching to Bland's rule after kStallLimit degenerate
// steps. The final basis is refactorized against the original data so
// that identical bases yield bit-identical solutions regardless of the
// pivot path taken.
class Simplex {
public:
    explicit Simplex(const LinearProgram& lp) : lp_(lp) { build(); }

    LpSolution run() {
        LpSolution out;
        if (need_phase1_) {
            phase(true);
            double infeas = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const int col = art_col_[i];
                if (col < 0) continue;
                const double v = value_of(static_cast<std::size_t>(col));
                if (v > kFeasTol * 10) {
                    infeas += v;
                    out.infeasible_rows.push_back(i);
                }
            }
            if (infeas > kFeasTol * 10) {
                out.status = LpStatus::Infeasible;
                return out;
            }
            // Pin artificials to zero for phase 2.
            for (std::size_t i = 0; i < m_; ++i) {
                const int col = art_col_[i];
                if (col < 0) continue;
                up_[static_cast<std::size_t>(col)] = 0.0;
            }
            out.infeasible_rows.clear();
        }
        if (!phase(false)) {
            out.status = LpStatus::Unbounded;
            return out;
        }
        extract(out);
        return out;
    }

private:
    const LinearProgram& lp_;
    std::size_t n_ = 0, m_ = 0, cols_ = 0;
    std::vector<std::vector<double>> tab_; // m x cols, equals B^-1 [A I S]
    std::vector<double> lo_, up_, cost_;
    std::vector<double> xb_;
    std::vector<int> basis_;
    std::vector<int> art_col_;  // row -> artificial column (or -1)
    std::vector<int> art_sign_; // +-1 per artificial row
    std::vector<char> in_basis_, at_up_;
    bool need_phase1_ = false;

    double value_of(std::size_t col) const {
        if (in_basis_[col]) {
            for (std::size_t i = 0; i < m_; ++i)
                if (basis_[i] == static_cast<int>(col)) return xb_[i];
        }
        return at_up_[col] ? up_[col] : lo_[col];
    }

    void build() {
        n_ = lp_.num_vars();
        m_ = lp_.rows.size();
        art_col_.assign(m_, -1);
        art_sign_.assign(m_, 1);

        // residuals with structural variables parked at their lower bounds
        std::vector<double> resid(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            double r = lp_.rows[i].rhs;
            for (std::size_t j = 0; j < n_; ++j) r -= lp_.rows[i].coeffs[j] * lp_.lower[j];
            resid[i] = r;
        }

        std::size_t n_art = 0;
        for (std::size_t i = 0; i < m_; ++i) {
            const bool eq = lp_.rows[i].relation == Relation::Equal;
            const bool slack_ok = eq ? std::fabs(resid[i]) == 0.0 : resid[i] >= 0.0;
            if (!slack_ok) {
                art_col_[i] = static_cast<int>(n_ + m_ + n_art);
                art_sign_[i] = resid[i] >= 0.0 ? 1 : -1;
                ++n_art;
            }
        }
        need_phase1_ = n_art > 0;
        cols_ = n_ + m_ + n_art;

        lo_.assign(cols_, 0.0);
        up_.assign(cols_, 0.0);
        cost_.assign(cols_, 0.0);
        for (std::size_t j = 0; j < n_; ++j) {
            lo_[j] = lp_.lower[j];
            up_[j] = lp_.upper[j];
            cost_[j] = lp_.objective[j];
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t s = n_ + i;
            lo_[s] = 0.0;
            up_[s] = lp_.rows[i].relation == Relation::Equal ? 0.0 : kUnbounded;
        }
        for (std::size_t i = 0; i < m_; ++i) {
            const int a = art_col_[i];
            if (a < 0) continue;
            lo_[static_cast<std::size_t>(a)] = 0.0;
            up_[static_cast<std::size_t>(a)] = std::fabs(resid[i]) + 1.0;
        }

        tab_.assign(m_, std::vector<double>(cols_, 0.0));
        in_basis_.assign(cols_, 0);
        at_up_.assign(cols_, 0);
        basis_.assign(m_, -1);
        xb_.assign(m_, 0.0);

        for (std::size_t i = 0; i < m_; ++i) {
            const double sign = art_col_[i] >= 0 ? static_cast<double>(art_sign_[i]) : 1.0;
            for (std::size_t j = 0; j < n_; ++j) tab_[i][j] = sign * lp_.rows[i].coeffs[j];
            tab_[i][n_ + i] = sign;
            if (art_col_[i] >= 0) tab_[i][static_cast<std::size_t>(art_col_[i])] = 1.0;

            if (art_col_[i] >= 0) {
                basis_[i] = art_col_[i];
                xb_[i] = std::fabs(resid[i]);
            } else {
                basis_[i] = static_cast<int>(n_ + i);
                xb_[i] = resid[i];
            }
            in_basis_[static_cast<std::size_t>(basis_[i])] = 1;
        }
    }

    // Runs one simplex phase; returns false when unbounded.
    bool phase(bool phase1) {
        std::vector<double> cost(cols_, 0.0);
        if (phase1) {
            for (std::size_t i = 0; i < m_; ++i)
                if (art_col_[i] >= 0) cost[static_cast<std::size_t>(art_col_[i])] = -1.0;
        } else {
            cost = cost_;
        }

        bool bland = false;
        int stall = 0;
        const std::size_t max_iter = 20000 + 200 * cols_;
        std::vector<double> cb(m_);

        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            for (std::size_t i = 0; i < m_; ++i) cb[i] = cost[static_cast<std::size_t>(basis_[i])];

            int enter = -1;
            double best_mag = kPivotTol;
            for (std::size_t j = 0; j < cols_; ++j) {
                if (in_basis_[j] || lo_[j] == up_[j]) continue;
                double z = 0.0;
                for (std::size_t i = 0; i < m_; ++i) z += cb[i] * tab_[i][j];
                const double d = cost[j] - z;
                const double mag = at_up_[j] ? -d : d;
                if (mag > best_mag) {
                    best_mag = mag;
                    enter = static_cast<int>(j);
                    if (bland) break; // lowest eligible index
                }
            }
            if (enter < 0) return true; // phase optimal

            const std::size_t e = static_cast<std::size_t>(enter);
            const double dir = at_up_[e] ? -1.0 : 1.0;

            double t_best = up_[e] - lo_[e]; // bound-flip distance
            int leave = -1;
            for (std::size_t i = 0; i < m_; ++i) {
                const double w = dir * tab_[i][e];
                double cand;
                if (w > kPivotTol) {
                    cand = (xb_[i] - lo_[static_cast<std::size_t>(basis_[i])]) / w;
                } else if (w < -kPivotTol) {
                    cand = (up_[static_cast<std::size_t>(basis_[i])] - xb_[i]) / (-w);
                } else {
                    continue;
                }
                if (cand < 0.0) cand = 0.0;
                const bool better = cand < t_best - 1e-12;
                const bool tie = !better && cand < t_best + 1e-12 && leave >= 0 &&
                                 basis_[i] < basis_[leave];
                if (better || tie) {
                    t_best = std::min(t_best, cand);
                    leave = static_cast<int>(i);
                }
            }

            if (t_best >= kUnboundedGuard) {
                if (phase1)
                    throw std::logic_error("simplex: unbounded feasibility phase");
                return false;
            }

            if (leave < 0) {
                // bound flip, no basis change
                for (std::size_t i = 0; i < m_; ++i) xb_[i] -= dir * t_best * tab_[i][e];
                at_up_[e] = at_up_[e] ? 0 : 1;
            } else {
                const std::size_t r = static_cast<std::size_t>(leave);
                const double entering_val = (at_up_[e] ? up_[e] : lo_[e]) + dir * t_best;
                for (std::size_t i = 0; i < m_; ++i)
                    if (i != r) xb_[i] -= dir * t_best * tab_[i][e];

                const std::size_t lv = static_cast<std::size_t>(basis_[r]);
                in_basis_[lv] = 0;
                at_up_[lv] = dir * tab_[r][e] < 0.0 ? 1 : 0;

                const double piv = tab_[r][e];
                for (std::size_t j = 0; j < cols_; ++j) tab_[r][j] /= piv;
                for (std::size_t i = 0; i < m_; ++i) {
                    if (i == r) continue;
                    const double f = tab_[i][e];
                    if (f == 0.0) continue;
                    for (std::size_t j = 0; j < cols_; ++j) tab_[i][j] -= f * tab_[r][j];
                }
                basis_[r] = enter;
                in_basis_[e] = 1;
                xb_[r] = entering_val;
            }

            stall = t_best <= 1e-10 ? stall + 1 : 0;
            if (stall >= kStallLimit) bland = true;
        }
        throw std::runtime_error("simplex: iteration limit exceeded");
    }

    // Original-data column `col` entry for row i.
    double col_entry(std::size_t i, std::size_t col) const {
        if (col < n_) return lp_.rows[i].coeffs[col];
        if (col < n_ + m_) return col == n_ + i ? 1.0 : 0.0;
        // artificial
        for (std::size_t r = 0; r < m_; ++r)
            if (art_col_[r] == static_cast<int>(col))
                return r == i ? static_cast<double>(art_sign_[r]) : 0.0;
        return 0.0;
    }

    void extract(LpSolution& out) {
        // Refactorize the final basis from the original data.
        std::vector<double> bmat(m_ * m_, 0.0);
        for (std::size_t k = 0; k < m_; ++k)
            for (std::size_t i = 0; i < m_; ++i)
                bmat[i * m_ + k] = col_entry(i, static_cast<std::size_t>(basis_[k]));
        const LuFactors fac = lu_factor(bmat, m_);

        std::vector<double> values(cols_, 0.0);
        for (std::size_t j = 0; j < cols_; ++j)
            if (!in_basis_[j]) values[j] = at_up_[j] ? up_[j] : lo_[j];

        if (!fac.singular && m_ > 0) {
            std::vector<double> beff(m_);
            for (std::size_t i = 0; i < m_; ++i) {
                double b = lp_.rows[i].rhs;
                for (std::size_t j = 0; j < cols_; ++j) {
                    if (in_basis_[j] || values[j] == 0.0) continue;
                    b -= col_entry(i, j) * values[j];
                }
                beff[i] = b;
            }
            const std::vector<double> xbasic = lu_solve(fac, beff);
            for (std::size_t k = 0; k < m_; ++k) values[static_cast<std::size_t>(basis_[k])] = xbasic[k];

            // duals: B^T y = c_B, solved via LU of B^T
            std::vector<double> bt(m_ * m_);
            for (std::size_t i = 0; i < m_; ++i)
                for (std::size_t j = 0; j < m_; ++j) bt[i * m_ + j] = bmat[j * m_ + i];
            const LuFactors fact = lu_factor(bt, m_);
            std::vector<double> cbv(m_);
            for (std::size_t k = 0; k < m_; ++k) cbv[k] = cost_[static_cast<std::size_t>(basis_[k])];
            out.row_duals = fact.singular ? duals_from_tableau() : lu_solve(fact, cbv);
        } else {
            for (std::size_t k = 0; k < m_; ++k) values[static_cast<std::size_t>(basis_[k])] = xb_[k];
            out.row_duals = duals_from_tableau();
        }

        out.status = LpStatus::Optimal;
        out.primal.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n_));
        out.reduced_costs.resize(n_);
        for (std::size_t j = 0; j < n_; ++j) {
            double z = 0.0;
            for (std::size_t i = 0; i < m_; ++i) z += out.row_duals[i] * lp_.rows[i].coeffs[j];
            out.reduced_costs[j] = lp_.objective[j] - z;
        }
        double obj = 0.0;
        for (std::size_t j = 0; j < n_; ++j) obj += lp_.objective[j] * out.primal[j];
        out.objective_value = obj;
    }

    std::vector<double> duals_from_tableau() const {
        // y_i = c_B . (B^-1 e_i); the slack columns of the tableau carry B^-1.
        std::vector<double> y(m_, 0.0);
        for (std::size_t i = 0; i < m_; ++i) {
            double v = 0.0;
            for (std::size_t k = 0; k < m_; ++k)
                v += cost_[static_cast<std::size_t>(basis_[k])] * tab_[k][n_ + i];
            y[i] = v;
        }
        return y;
    }
};

} // namespace detail

inline LpSolution solve(const LinearProgram& lp) {
    detail::check_well_formed(lp);
    detail::Simplex engine(lp);
    return engine.run();
}

/// True iff all rows and bounds hold within 1e-9; reports the worst violation.
inline FeasibilityCheck is_feasible(const LinearProgram& lp, const std::vector<double>& point) {
    detail::check_well_formed(lp);
    if (point.size() != lp.num_vars())
        throw std::invalid_argument("is_feasible: point dimension mismatch");
    double worst = 0.0;
    for (std::size_t j = 0; j < lp.num_vars(); ++j) {
        worst = std::max(worst, lp.lower[j] - point[j]);
        worst = std::max(worst, point[j] - lp.upper[j]);
    }
    for (const LpRow& row : lp.rows) {
        double act = 0.0;
        for (std::size_t j = 0; j < point.size(); ++j) act += row.coeffs[j] * point[j];
        if (row.relation == Relation::Equal)
            worst = std::max(worst, std::fabs(act - row.rhs));
        else
            worst = std::max(worst, act - row.rhs);
    }
    return {worst <= detail::kFeasTol, worst};
}

// KKT audit computed from scratch against the original problem data.
// Reduced costs below 1e-9 in magnitude are treated as zero when forming
// the dual objective so that huge upper-bound sentinels do not amplify
// noise into the reported gap.
inline KktReport verify_kkt(const LinearProgram& lp, const LpSolution& sol) {
    detail::check_well_formed(lp);
    KktReport rep;
    if (sol.status != LpStatus::Optimal) return rep;
    rep.applicable = true;

    const std::size_t n = lp.num_vars();
    const std::size_t m = lp.rows.size();
    if (sol.primal.size() != n || sol.row_duals.size() != m)
        throw std::invalid_argument("verify_kkt: solution dimensions mismatch");

    double pv = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        pv = std::max(pv, lp.lower[j] - sol.primal[j]);
        pv = std::max(pv, sol.primal[j] - lp.upper[j]);
    }
    std::vector<double> slack(m);
    for (std::size_t i = 0; i < m; ++i) {
        double act = 0.0;
        for (std::size_t j = 0; j < n; ++j) act += lp.rows[i].coeffs[j] * sol.primal[j];
        slack[i] = lp.rows[i].rhs - act;
        if (lp.rows[i].relation == Relation::Equal)
            pv = std::max(pv, std::fabs(slack[i]));
        else
            pv = std::max(pv, -slack[i]);
    }

    double dv = 0.0, cs = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        if (lp.rows[i].relation == Relation::LessEqual) {
            dv = std::max(dv, -sol.row_duals[i]);
            cs = std::max(cs, std::fabs(sol.row_duals[i] * slack[i]));
        }
    }

    double dual_obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) dual_obj += sol.row_duals[i] * lp.rows[i].rhs;
    for (std::size_t j = 0; j < n; ++j) {
        double z = 0.0;
        for (std::size_t i = 0; i < m; ++i) z += sol.row_duals[i] * lp.rows[i].coeffs[j];
        double d = lp.objective[j] - z;
        const bool interior = sol.primal[j] > lp.lower[j] + detail::kFeasTol &&
                              sol.primal[j] < lp.upper[j] - detail::kFeasTol;
        if (interior) {
            dv = std::max(dv, std::fabs(d));
        } else if (sol.primal[j] <= lp.lower[j] + detail::kFeasTol) {
            dv = std::max(dv, d);
            if (d < -detail::kFeasTol) cs = std::max(cs, -d * (sol.primal[j] - lp.lower[j]));
        } else {
            dv = std::max(dv, -d);
            if (d > detail::kFeasTol) cs = std::max(cs, d * (lp.upper[j] - sol.primal[j]));
        }
        if (std::fabs(d) < 1e-9) d = 0.0;
        if (d > 0.0) dual_obj += d * lp.upper[j];
        if (d < 0.0) dual_obj += d * lp.lower[j];
    }
    rep.max_primal_violation = pv;
    rep.max_dual_violation = dv;
    rep.max_slackness_violation = cs;
    rep.duality_gap = std::fabs(sol.objective_value - dual_obj);
    rep.pass = pv <= 1e-7 && dv <= 1e-7 && cs <= 1e-7 &&
               rep.duality_gap <= 1e-7 * (1.0 + std::fabs(sol.objective_value));
    return rep;
}

} // namespace nodal
