#pragma once

#include <functional>

#include "ldmp/common.hpp"

namespace ldmp::perron {

// Dominant eigendata of primitive non-negative matrices, the generalized
// Doob transform, and the closed-form dominant value of the infinite
// tridiagonal family.

struct PrimitivityReport {
    bool irreducible = false;
    bool aperiodic = false;
    int period = 0;  // gcd of cycle lengths; 0 when not irreducible
};

struct PerronData {
    double value = 0.0;     // dominant eigenvalue
    Vec right_vector;       // positive, normalized so the max entry is 1
    double residual = kInf; // ||M e - value e||_inf / ||e||_inf
};

struct TridiagonalSpec {
    double diag;   // constant diagonal entry
    double upper;  // super-diagonal entry
    double lower;  // sub-diagonal entry
};

/// Classify the support digraph of a non-negative square matrix.
/// Period is computed, when irreducible, as the gcd of (level(u)+1-level(v))
/// over all edges of a BFS ordering from state 0.
inline PrimitivityReport check_primitive(const Mat& m) {
    if (!m.square() || m.rows < 1) throw ValidationError("check_primitive: matrix must be square and non-empty");
    if (!m.nonnegative()) throw ValidationError("check_primitive: negative entries");
    const int n = m.rows;
    if (n == 1) {
        PrimitivityReport rep;
        rep.irreducible = m(0, 0) > 0.0;
        rep.aperiodic = rep.irreducible;
        rep.period = rep.irreducible ? 1 : 0;
        return rep;
    }

    auto reach = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v) {
                double w = forward ? m(u, v) : m(v, u);
                if (w > 0.0 && !seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
        return seen;
    };
    auto fwd = reach(true);
    auto bwd = reach(false);
    bool irreducible = true;
    for (int i = 0; i < n; ++i)
        if (!fwd[i] || !bwd[i]) irreducible = false;

    PrimitivityReport rep;
    rep.irreducible = irreducible;
    if (!irreducible) return rep;

    // BFS levels from 0, then gcd over all edges of the level defect.
    std::vector<int> level(n, -1);
    std::vector<int> queue{0};
    level[0] = 0;
    for (size_t h = 0; h < queue.size(); ++h) {
        int u = queue[h];
        for (int v = 0; v < n; ++v)
            if (m(u, v) > 0.0 && level[v] < 0) {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
    }
    int g = 0;
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (m(u, v) > 0.0) g = gcd_int(g, level[u] + 1 - level[v]);
    rep.period = g == 0 ? 1 : g;
    rep.aperiodic = rep.period == 1;
    return rep;
}

/// Power iteration with Rayleigh-quotient value estimates. Requires a
/// primitive matrix; stops on the eigenvector residual.
inline PerronData perron_finite(const Mat& m, double tol = 1e-12, int max_iter = 100000) {
    if (tol <= 0.0) throw ValidationError("perron_finite: tol must be positive");
    auto rep = check_primitive(m);
    if (!rep.irreducible || !rep.aperiodic)
        throw NotPrimitiveError("perron_finite: matrix is not irreducible and aperiodic");
    const int n = m.rows;
    if (n == 1) return PerronData{m(0, 0), Vec{1.0}, 0.0};

    Vec v(n, 1.0);
    PerronData out;
    for (int it = 0; it < max_iter; ++it) {
        Vec w = mat_vec(m, v);
        double lam = dot(v, w) / dot(v, v);
        double resid = 0.0;
        for (int i = 0; i < n; ++i) resid = std::max(resid, std::fabs(w[i] - lam * v[i]));
        // v is kept max-normalized, so ||v||_inf == 1.
        if (resid <= tol) {
            out.value = lam;
            out.right_vector = v;
            out.residual = resid;
            return out;
        }
        double mx = max_abs(w);
        if (mx <= 0.0) throw NoConvergenceError("perron_finite: iterate vanished");
        for (double& x : w) x /= mx;
        v = std::move(w);
        out.value = lam;
        out.residual = resid;
    }
    throw NoConvergenceError("perron_finite: residual above tol after max_iter");
}

/// Left dominant eigenvector (of m^T), same normalization.
inline PerronData perron_finite_left(const Mat& m, double tol = 1e-12, int max_iter = 100000) {
    return perron_finite(transpose(m), tol, max_iter);
}

/// S_{b,b'} = e(b)^{-1} M_{b,b'} e(b') / lambda. Rows must sum to 1 within
/// 1e-9 given the supplied eigendata; they are then normalized exactly.
inline Mat doob_transform(const Mat& m, const PerronData& pd) {
    if (static_cast<int>(pd.right_vector.size()) != m.rows)
        throw ValidationError("doob_transform: eigenvector size mismatch");
    if (pd.value <= 0.0 || !all_positive(pd.right_vector))
        throw ValidationError("doob_transform: eigendata must be positive");
    const int n = m.rows;
    Mat s(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            s(i, j) = m(i, j) * pd.right_vector[j] / (pd.value * pd.right_vector[i]);
    for (int i = 0; i < n; ++i) {
        double rs = 0.0;
        for (int j = 0; j < n; ++j) rs += s(i, j);
        if (std::fabs(rs - 1.0) > 1e-9)
            throw InconsistentEigendataError("doob_transform: row sums deviate beyond 1e-9");
        for (int j = 0; j < n; ++j) s(i, j) /= rs;
    }
    return s;
}

/// Stationary row vector of a stochastic matrix, by damped fixed-point
/// iteration (the damping keeps periodic chains convergent).
inline Vec stationary_distribution(const Mat& s, double tol = 1e-12, int max_iter = 1000000) {
    const int n = s.rows;
    Vec theta(n, 1.0 / n);
    for (int it = 0; it < max_iter; ++it) {
        Vec next = vec_mat(theta, s);
        double resid = linf_diff(next, theta);
        for (int i = 0; i < n; ++i) theta[i] = 0.5 * theta[i] + 0.5 * next[i];
        normalize_sum(theta);
        if (resid <= tol) {
            normalize_sum(theta);
            return theta;
        }
    }
    throw NoConvergenceError("stationary_distribution: no convergence");
}

struct TridiagonalPerron {
    double value;
    std::function<double(int)> eigenvector_term;
};

/// Dominant value diag + 2 sqrt(upper*lower) of the infinite tridiagonal
/// operator, with the explicit positive eigenvector term.
inline TridiagonalPerron perron_tridiagonal_infinite(const TridiagonalSpec& spec) {
    if (spec.diag <= 0.0 || spec.upper <= 0.0 || spec.lower <= 0.0)
        throw ValidationError("perron_tridiagonal_infinite: all entries must be positive");
    double value = spec.diag + 2.0 * std::sqrt(spec.upper * spec.lower);
    double ratio = spec.lower / spec.upper;
    return TridiagonalPerron{
        value,
        [ratio](int n) { return (n + 1) * std::pow(ratio, 0.5 * (n + 1)); },
    };
}

namespace detail {
inline double log_binom(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}
}  // namespace detail

/// Total weight of closed 2n-step walks at the origin of the infinite
/// tridiagonal operator:
///   sum_k Catalan(n-k) * binom(2n, 2k) * diag^(2k) * (upper*lower)^(n-k).
/// Small n uses exact accumulation; larger n switches to log-space terms.
inline double return_weight_even(int n, const TridiagonalSpec& spec) {
    if (n < 0) throw ValidationError("return_weight_even: n must be >= 0");
    if (n == 0) return 1.0;
    const double q = spec.upper * spec.lower;
    if (n <= 25) {
        // Pascal rows stay exact in doubles at these sizes.
        std::vector<Vec> binom(2 * n + 1);
        for (int r = 0; r <= 2 * n; ++r) {
            binom[r].assign(r + 1, 1.0);
            for (int c = 1; c < r; ++c) binom[r][c] = binom[r - 1][c - 1] + binom[r - 1][c];
        }
        auto catalan = [&](int m) { return binom[2 * m][m] / (m + 1.0); };
        double total = 0.0;
        for (int k = 0; k <= n; ++k)
            total += catalan(n - k) * binom[2 * n][2 * k] * std::pow(spec.diag, 2 * k) *
                     std::pow(q, n - k);
        return total;
    }
    // Log-safe path.
    Vec logs(n + 1);
    double mx = -kInf;
    for (int k = 0; k <= n; ++k) {
        int c = n - k;
        double log_cat = detail::log_binom(2 * c, c) - std::log(c + 1.0);
        logs[k] = log_cat + detail::log_binom(2 * n, 2 * k) + 2.0 * k * std::log(spec.diag) +
                  (n - k) * std::log(q);
        mx = std::max(mx, logs[k]);
    }
    double acc = 0.0;
    for (double lv : logs) acc += std::exp(lv - mx);
    return std::exp(mx + std::log(acc));
}

}  // namespace ldmp::perron
