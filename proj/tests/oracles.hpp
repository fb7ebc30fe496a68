#pragma once

// Test-only oracles, independent of the library's solver paths:
// characteristic-polynomial root bracketing for small dense matrices and
// Sturm bisection for symmetrizable tridiagonal matrices.

#include <random>

#include "ldmp/common.hpp"
#include "ldmp/empirical.hpp"
#include "ldmp/rational.hpp"

namespace oracles {

using ldmp::Mat;
using ldmp::Vec;

/// Characteristic polynomial coefficients of m via Faddeev-LeVerrier:
/// p(x) = x^n + c[1] x^{n-1} + ... + c[n].
inline Vec charpoly(const Mat& m) {
    const int n = m.rows;
    Vec c(n + 1, 0.0);
    c[0] = 1.0;
    Mat acc = Mat::identity(n);
    for (int k = 1; k <= n; ++k) {
        acc = ldmp::mat_mul(m, acc);
        double tr = 0.0;
        for (int i = 0; i < n; ++i) tr += acc(i, i);
        c[k] = -tr / k;
        for (int i = 0; i < n; ++i) acc(i, i) += c[k];
    }
    return c;
}

inline double poly_eval(const Vec& c, double x) {
    double v = 0.0;
    for (double ck : c) v = v * x + ck;
    return v;
}

/// Largest real root of the characteristic polynomial, bracketed by a fine
/// downward scan from above the spectral radius and refined by bisection.
/// Intended for small test matrices with a healthy spectral gap.
inline double dense_perron_value(const Mat& m) {
    Vec c = charpoly(m);
    double hi = 1.0;
    for (int i = 0; i < m.rows; ++i) {
        double rs = 0.0;
        for (int j = 0; j < m.cols; ++j) rs += std::fabs(m(i, j));
        hi = std::max(hi, rs);
    }
    hi += 1.0;
    const int scans = 1 << 14;
    double lo = hi;
    for (int s = 1; s <= scans; ++s) {
        double x = hi * (1.0 - static_cast<double>(s) / scans);
        if (poly_eval(c, x) <= 0.0) {
            lo = x;
            break;
        }
    }
    if (lo == hi) throw std::runtime_error("dense_perron_value: no sign change found");
    double a = lo, b = hi;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (a + b);
        if (poly_eval(c, mid) <= 0.0)
            a = mid;
        else
            b = mid;
    }
    return 0.5 * (a + b);
}

/// Largest eigenvalue of a tridiagonal matrix with positive off-diagonal
/// products, by Sturm-count bisection on the symmetrized form.
/// diag has length n; upper/lower have length n-1.
inline double sturm_tridiag_max_eig(const Vec& diag, const Vec& upper, const Vec& lower) {
    const int n = static_cast<int>(diag.size());
    Vec off2(n - 1);
    for (int i = 0; i + 1 < n; ++i) {
        off2[i] = upper[i] * lower[i];
        if (off2[i] <= 0.0) throw std::runtime_error("sturm oracle needs positive off products");
    }
    auto count_below = [&](double x) {
        int cnt = 0;
        double p = diag[0] - x;
        if (p < 0.0) ++cnt;
        for (int i = 1; i < n; ++i) {
            double denom = p;
            if (std::fabs(denom) < 1e-300) denom = denom < 0.0 ? -1e-300 : 1e-300;
            p = (diag[i] - x) - off2[i - 1] / denom;
            if (p < 0.0) ++cnt;
        }
        return cnt;
    };
    double lo = diag[0], hi = diag[0];
    for (int i = 0; i < n; ++i) {
        double wing = (i > 0 ? std::sqrt(off2[i - 1]) : 0.0) + (i + 1 < n ? std::sqrt(off2[i]) : 0.0);
        lo = std::min(lo, diag[i] - wing);
        hi = std::max(hi, diag[i] + wing);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (count_below(mid) >= n)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

/// Random primitive model with entries in [lo, hi] and positive vectors.
inline ldmp::rational::RationalModel random_model(std::mt19937_64& rng, int alphabet, int dim,
                                                  double lo = 0.1, double hi = 1.1) {
    auto u = [&](double a, double b) { return a + (b - a) * ldmp::next_double(rng); };
    ldmp::rational::RationalModel m;
    m.alphabet_size = alphabet;
    for (int a = 0; a < alphabet; ++a) {
        Mat mat(dim, dim);
        for (double& v : mat.a) v = u(lo, hi);
        m.matrix_per_symbol.push_back(std::move(mat));
    }
    m.x.resize(dim);
    m.y.resize(dim);
    for (double& v : m.x) v = u(0.5, 1.5);
    for (double& v : m.y) v = u(0.5, 1.5);
    return m;
}

/// Random stationary pair measure: pi(a) K(a,a') for a random positive
/// kernel K and its stationary law.
inline ldmp::empirical::KWordMeasure random_stationary_pair(std::mt19937_64& rng, int alphabet) {
    Mat k(alphabet, alphabet);
    for (double& v : k.a) v = 0.1 + ldmp::next_double(rng);
    for (int a = 0; a < alphabet; ++a) {
        double rs = 0.0;
        for (int b = 0; b < alphabet; ++b) rs += k(a, b);
        for (int b = 0; b < alphabet; ++b) k(a, b) /= rs;
    }
    Vec pi(alphabet, 1.0 / alphabet);
    for (int it = 0; it < 20000; ++it) {
        Vec nxt = ldmp::vec_mat(pi, k);
        double r = ldmp::linf_diff(nxt, pi);
        pi = nxt;
        ldmp::normalize_sum(pi);
        if (r < 1e-16) break;
    }
    auto nu = ldmp::empirical::KWordMeasure::zero(alphabet, 2);
    for (int a = 0; a < alphabet; ++a)
        for (int b = 0; b < alphabet; ++b) nu.weights[a * alphabet + b] = pi[a] * k(a, b);
    ldmp::normalize_sum(nu.weights);
    return nu;
}

}  // namespace oracles
