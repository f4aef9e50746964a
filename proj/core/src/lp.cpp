#include "mvivm/lp.hpp"

#include <cassert>
#include <stdexcept>

namespace mvivm {

namespace {

class Tableau {
public:
    Tableau(const std::vector<std::vector<Rational>>& A,
            const std::vector<Rational>& b, std::size_t nx)
        : m_(A.size()), nx_(nx), ncols_(nx + 2 * A.size()) {
        // Columns: x (nx), surplus (m), artificial (m), then rhs.
        rows_.assign(m_, std::vector<Rational>(ncols_ + 1));
        basis_.resize(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            for (std::size_t j = 0; j < nx_; ++j) rows_[i][j] = A[i][j];
            rows_[i][nx_ + i] = Rational(-1);
            rows_[i][nx_ + m_ + i] = Rational(1);
            rows_[i][ncols_] = b[i];
            basis_[i] = nx_ + m_ + i;
        }
    }

    // Runs simplex for min sum over `costs` (indexed by column). Returns the
    // objective value at optimum.
    Rational optimize(const std::vector<Rational>& costs, std::size_t active_cols) {
        obj_.assign(ncols_ + 1, Rational(0));
        for (std::size_t j = 0; j < active_cols; ++j) obj_[j] = costs[j];
        for (std::size_t i = 0; i < m_; ++i) {
            if (!costs[basis_[i]].is_zero()) {
                Rational f = costs[basis_[i]];
                for (std::size_t j = 0; j <= ncols_; ++j) obj_[j] -= f * rows_[i][j];
            }
        }
        for (;;) {
            std::size_t enter = active_cols;
            for (std::size_t j = 0; j < active_cols; ++j) {
                if (obj_[j] < Rational(0)) { enter = j; break; }  // Bland
            }
            if (enter == active_cols) break;
            std::size_t leave = m_;
            Rational best;
            for (std::size_t i = 0; i < m_; ++i) {
                if (rows_[i][enter] > Rational(0)) {
                    Rational ratio = rows_[i][ncols_] / rows_[i][enter];
                    if (leave == m_ || ratio < best ||
                        (ratio == best && basis_[i] < basis_[leave])) {
                        leave = i;
                        best = ratio;
                    }
                }
            }
            if (leave == m_) throw std::runtime_error("unbounded LP");
            pivot(leave, enter);
        }
        return -obj_[ncols_];
    }

    void pivot(std::size_t p, std::size_t q) {
        Rational piv = rows_[p][q];
        for (auto& v : rows_[p]) v /= piv;
        for (std::size_t i = 0; i < m_; ++i) {
            if (i == p || rows_[i][q].is_zero()) continue;
            Rational f = rows_[i][q];
            for (std::size_t j = 0; j <= ncols_; ++j) rows_[i][j] -= f * rows_[p][j];
        }
        if (!obj_[q].is_zero()) {
            Rational f = obj_[q];
            for (std::size_t j = 0; j <= ncols_; ++j) obj_[j] -= f * rows_[p][j];
        }
        basis_[p] = q;
    }

    // Pivots artificial variables out of the basis where possible; rows that
    // cannot be pivoted are redundant constraints with zero rhs.
    void expel_artificials() {
        for (std::size_t i = 0; i < m_; ++i) {
            if (basis_[i] < nx_ + m_) continue;
            std::size_t q = nx_ + m_;
            for (std::size_t j = 0; j < nx_ + m_; ++j) {
                if (!rows_[i][j].is_zero()) { q = j; break; }
            }
            if (q < nx_ + m_) pivot(i, q);
        }
    }

    std::vector<Rational> solution() const {
        std::vector<Rational> x(nx_, Rational(0));
        for (std::size_t i = 0; i < m_; ++i)
            if (basis_[i] < nx_) x[basis_[i]] = rows_[i][ncols_];
        return x;
    }

    std::size_t nx_cols() const { return nx_; }
    std::size_t all_cols() const { return ncols_; }
    std::size_t rows() const { return m_; }

private:
    std::size_t m_;
    std::size_t nx_;
    std::size_t ncols_;
    std::vector<std::vector<Rational>> rows_;
    std::vector<Rational> obj_;
    std::vector<std::size_t> basis_;
};

}  // namespace

std::optional<LpSolution> solve_min_lp(const std::vector<std::vector<Rational>>& A,
                                       const std::vector<Rational>& b,
                                       const std::vector<Rational>& c) {
    assert(A.size() == b.size());
    const std::size_t m = A.size();
    const std::size_t nx = c.size();
    if (m == 0) return LpSolution{Rational(0), std::vector<Rational>(nx, Rational(0))};
    for (const auto& bi : b) assert(bi >= Rational(0));

    Tableau t(A, b, nx);

    std::vector<Rational> phase1(t.all_cols(), Rational(0));
    for (std::size_t i = 0; i < m; ++i) phase1[nx + m + i] = Rational(1);
    Rational infeas = t.optimize(phase1, t.all_cols());
    if (infeas > Rational(0)) return std::nullopt;
    t.expel_artificials();

    std::vector<Rational> phase2(t.all_cols(), Rational(0));
    for (std::size_t j = 0; j < nx; ++j) phase2[j] = c[j];
    Rational obj = t.optimize(phase2, nx + m);

    return LpSolution{obj, t.solution()};
}

}  // namespace mvivm
