#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldmp {

using Vec = std::vector<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- errors

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define LDMP_DEFINE_ERROR(Name)                                              \
    struct Name : Error {                                                    \
        using Error::Error;                                                  \
    };

LDMP_DEFINE_ERROR(ValidationError)
LDMP_DEFINE_ERROR(NotPrimitiveError)
LDMP_DEFINE_ERROR(NoConvergenceError)
LDMP_DEFINE_ERROR(InconsistentEigendataError)
LDMP_DEFINE_ERROR(NotStationaryInputError)
LDMP_DEFINE_ERROR(DegenerateLawError)
LDMP_DEFINE_ERROR(SizeLimitError)
LDMP_DEFINE_ERROR(RegionViolationError)
LDMP_DEFINE_ERROR(SupportViolationError)
LDMP_DEFINE_ERROR(TruncationFailureError)
LDMP_DEFINE_ERROR(InfeasibleError)
LDMP_DEFINE_ERROR(BoundViolationError)

#undef LDMP_DEFINE_ERROR

// ---------------------------------------------------------------- matrix

/// Dense row-major matrix of doubles. Small dimensions throughout.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    bool square() const { return rows == cols; }
    bool nonnegative() const {
        return std::all_of(a.begin(), a.end(), [](double v) { return v >= 0.0; });
    }
};

inline Vec mat_vec(const Mat& m, const Vec& v) {
    Vec out(m.rows, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Vec vec_mat(const Vec& v, const Mat& m) {
    Vec out(m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        for (int j = 0; j < m.cols; ++j) out[j] += vi * m(i, j);
    }
    return out;
}

inline Mat mat_mul(const Mat& x, const Mat& y) {
    Mat out(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double v = x(i, k);
            if (v == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) out(i, j) += v * y(k, j);
        }
    return out;
}

inline Mat mat_add(const Mat& x, const Mat& y) {
    Mat out = x;
    for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += y.a[i];
    return out;
}

inline Mat transpose(const Mat& m) {
    Mat out(m.cols, m.rows);
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) out(j, i) = m(i, j);
    return out;
}

/// m^k with per-squaring max renormalization; returns the scaled matrix and
/// log of the factor taken out.
struct ScaledMat {
    Mat m;
    double log_scale = 0.0;
};

inline double max_abs(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

inline ScaledMat mat_pow_scaled(Mat base, unsigned long long k) {
    ScaledMat acc{Mat::identity(base.rows), 0.0};
    double base_log = 0.0;
    auto renorm = [](Mat& m, double& lg) {
        double mx = max_abs(m.a);
        if (mx > 0.0 && (mx > 1e150 || mx < 1e-150)) {
            for (double& v : m.a) v /= mx;
            lg += std::log(mx);
        }
    };
    while (k > 0) {
        if (k & 1ull) {
            acc.m = mat_mul(acc.m, base);
            acc.log_scale += base_log;
            renorm(acc.m, acc.log_scale);
        }
        k >>= 1;
        if (k == 0) break;
        base = mat_mul(base, base);
        base_log *= 2.0;
        renorm(base, base_log);
    }
    return acc;
}

// ---------------------------------------------------------------- vectors

inline double sum(const Vec& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

inline double dot(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double linf_diff(const Vec& x, const Vec& y) {
    double m = 0.0;
    for (size_t i = 0; i < x.size(); ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

inline double l1_diff(const Vec& x, const Vec& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += std::fabs(x[i] - y[i]);
    return s;
}

inline void normalize_sum(Vec& v) {
    double s = sum(v);
    if (s > 0.0)
        for (double& x : v) x /= s;
}

inline bool all_positive(const Vec& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

// ---------------------------------------------------------------- entropy

/// x log x with the 0 log 0 = 0 convention.
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

/// Binary entropy-type function H(x) = x log x + (1-x) log(1-x), H(0)=H(1)=0.
inline double hbin(double x) { return xlogx(x) + xlogx(1.0 - x); }

/// One term of a relative entropy sum: q log(q/p), with q log(q/0) = +inf for q>0.
inline double rel_entropy_term(double q, double p) {
    if (q <= 0.0) return 0.0;
    if (p <= 0.0) return kInf;
    return q * std::log(q / p);
}

inline double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// ---------------------------------------------------------------- weights

/// A non-negative weight carried in log space. `underflowed` records that a
/// plain double product would have dropped below 1e-300 at some prefix.
struct LogWeight {
    double log_value = -kInf;
    bool underflowed = false;

    double value() const { return std::exp(log_value); }
    bool is_zero() const { return log_value == -kInf; }
};

// ---------------------------------------------------------------- random

/// Uniform double in [0,1) with 53 random bits; identical across platforms
/// for a given mt19937_64 stream.
inline double next_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Index drawn proportionally to the (non-negative) weights.
inline int draw_weighted(const Vec& w, double total, std::mt19937_64& rng) {
    double u = next_double(rng) * total;
    double acc = 0.0;
    int last = -1;
    for (size_t i = 0; i < w.size(); ++i) {
        if (w[i] <= 0.0) continue;
        acc += w[i];
        last = static_cast<int>(i);
        if (u < acc) return last;
    }
    return last;
}

inline int gcd_int(int a, int b) {
    while (b != 0) {
        int t = a % b;
        a = b;
        b = t;
    }
    return a < 0 ? -a : a;
}

}  // namespace ldmp
