#pragma once

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace nodal::detail {

// Row-major dense LU with partial pivoting. Small systems only; the
// factorization is deterministic (ties resolved by lowest row index).
struct LuFactors {
    std::size_t n = 0;
    std::vector<double> lu;       // n x n, row-major
    std::vector<std::size_t> piv; // row permutation
    bool singular = false;
};

inline LuFactors lu_factor(std::vector<double> a, std::size_t n, double eps = 1e-11) {
    LuFactors f;
    f.n = n;
    f.lu = std::move(a);
    f.piv.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.piv[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t best = k;
        double best_mag = std::fabs(f.lu[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double mag = std::fabs(f.lu[i * n + k]);
            if (mag > best_mag) {
                best_mag = mag;
                best = i;
            }
        }
        if (best_mag <= eps) {
            f.singular = true;
            return f;
        }
        if (best != k) {
            std::swap(f.piv[k], f.piv[best]);
            for (std::size_t j = 0; j < n; ++j) std::swap(f.lu[k * n + j], f.lu[best * n + j]);
        }
        const double pivot = f.lu[k * n + k];
        for (std::size_t i = k + 1; i < n; ++i) {
            const double m = f.lu[i * n + k] / pivot;
            f.lu[i * n + k] = m;
            if (m == 0.0) continue;
            for (std::size_t j = k + 1; j < n; ++j) f.lu[i * n + j] -= m * f.lu[k * n + j];
        }
    }
    return f;
}

inline std::vector<double> lu_solve(const LuFactors& f, const std::vector<double>& rhs) {
    const std::size_t n = f.n;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = rhs[f.piv[i]];
    for (std::size_t i = 1; i < n; ++i) {
        double s = x[i];
        for (std::size_t j = 0; j < i; ++j) s -= f.lu[i * n + j] * x[j];
        x[i] = s;
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = x[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= f.lu[i * n + j] * x[j];
        x[i] = s / f.lu[i * n + i];
    }
    return x;
}

// Convenience: solve A x = b once; returns empty vector when singular.
inline std::vector<double> solve_dense(std::vector<double> a, std::size_t n,
                                       const std::vector<double>& b) {
    const LuFactors f = lu_factor(std::move(a), n);
    if (f.singular) return {};
    return lu_solve(f, b);
}

} // namespace nodal::detail
