#pragma once

#include "ldmp/common.hpp"
#include "ldmp/rational.hpp"

namespace ldmp::empirical {

// Order-k block frequencies with the cyclic wrap convention, and binned
// spatial measures placing index i at i/N in (0,1].

constexpr int kMaxOrder = 8;  // bounds |A|^k table sizes

/// Probability weights on A^k. Words are encoded big-endian: the first
/// symbol is the most significant base-|A| digit.
struct KWordMeasure {
    int alphabet_size = 0;
    int k = 0;
    Vec weights;

    size_t table_size() const { return weights.size(); }

    static size_t table_for(int alphabet, int k) {
        size_t t = 1;
        for (int i = 0; i < k; ++i) t *= static_cast<size_t>(alphabet);
        return t;
    }

    static KWordMeasure zero(int alphabet, int k) {
        if (k < 1 || k > kMaxOrder) throw ValidationError("k must be in 1..8");
        if (alphabet < 1) throw ValidationError("alphabet_size must be >= 1");
        KWordMeasure m;
        m.alphabet_size = alphabet;
        m.k = k;
        m.weights.assign(table_for(alphabet, k), 0.0);
        return m;
    }

    size_t encode(const std::vector<int>& w) const {
        size_t idx = 0;
        for (int c : w) idx = idx * alphabet_size + static_cast<size_t>(c);
        return idx;
    }

    std::vector<int> decode(size_t idx) const {
        std::vector<int> w(k);
        for (int i = k - 1; i >= 0; --i) {
            w[i] = static_cast<int>(idx % alphabet_size);
            idx /= alphabet_size;
        }
        return w;
    }

    std::string word_string(size_t idx) const {
        auto w = decode(idx);
        std::string s;
        for (int c : w) s += static_cast<char>('0' + c);
        return s;
    }
};

/// Sum out the last symbol: a k-measure becomes a (k-1)-measure.
inline KWordMeasure marginal_front(const KWordMeasure& nu) {
    if (nu.k < 2) throw ValidationError("marginal_front: k must be >= 2");
    KWordMeasure out = KWordMeasure::zero(nu.alphabet_size, nu.k - 1);
    for (size_t i = 0; i < nu.table_size(); ++i) out.weights[i / nu.alphabet_size] += nu.weights[i];
    return out;
}

/// Masses of the spatial measure per bin ((j-1)/L, j/L], weighted by the
/// symbol values.
struct SpatialMeasure {
    int bins = 0;
    Vec masses;
};

struct GeneralizedSpatialMeasure {
    int bins = 0;
    int k = 0;
    int alphabet_size = 0;
    Vec masses;  // bins x |A|^k, row-major by bin

    double& at(int bin, size_t word) { return masses[bin * words() + word]; }
    double at(int bin, size_t word) const { return masses[bin * words() + word]; }
    size_t words() const { return KWordMeasure::table_for(alphabet_size, k); }
};

namespace detail {
// 1-based index i of N points into L half-open bins ((j-1)/L, j/L].
inline int bin_of(int i, int n, int bins) {
    long long j = (static_cast<long long>(i) * bins + n - 1) / n;  // ceil(i*L/N)
    return static_cast<int>(j) - 1;
}
}  // namespace detail

/// nu^k[eta] = (1/N) sum_i delta over the k-block starting at i, indices mod N.
inline KWordMeasure empirical_k(const rational::Word& eta, int k) {
    if (k < 1 || k > kMaxOrder) throw ValidationError("empirical_k: k must be in 1..8");
    const int n = eta.size();
    KWordMeasure nu = KWordMeasure::zero(eta.alphabet_size, k);
    for (int i = 0; i < n; ++i) {
        size_t idx = 0;
        for (int j = 0; j < k; ++j) idx = idx * eta.alphabet_size + eta.symbols[(i + j) % n];
        nu.weights[idx] += 1.0 / n;
    }
    return nu;
}

inline SpatialMeasure spatial_empirical(const rational::Word& eta, int bins) {
    if (bins < 1) throw ValidationError("spatial_empirical: bins must be >= 1");
    const int n = eta.size();
    SpatialMeasure out{bins, Vec(bins, 0.0)};
    for (int i = 1; i <= n; ++i)
        out.masses[detail::bin_of(i, n, bins)] += static_cast<double>(eta.symbols[i - 1]) / n;
    return out;
}

inline GeneralizedSpatialMeasure generalized_spatial(const rational::Word& eta, int k, int bins) {
    if (k < 1 || k > kMaxOrder) throw ValidationError("generalized_spatial: k must be in 1..8");
    if (bins < 1) throw ValidationError("generalized_spatial: bins must be >= 1");
    const int n = eta.size();
    GeneralizedSpatialMeasure out;
    out.bins = bins;
    out.k = k;
    out.alphabet_size = eta.alphabet_size;
    out.masses.assign(static_cast<size_t>(bins) * KWordMeasure::table_for(eta.alphabet_size, k), 0.0);
    for (int i = 1; i <= n; ++i) {
        size_t idx = 0;
        for (int j = 0; j < k; ++j) idx = idx * eta.alphabet_size + eta.symbols[(i - 1 + j) % n];
        out.at(detail::bin_of(i, n, bins), idx) += 1.0 / n;
    }
    return out;
}

/// True iff summing the measure over a trailing symbol agrees with summing
/// over a leading symbol, for every (k-1)-prefix, within tol.
inline bool check_stationary(const KWordMeasure& nu, double tol) {
    if (nu.k == 1) return true;
    const int na = nu.alphabet_size;
    const size_t prefixes = KWordMeasure::table_for(na, nu.k - 1);
    const size_t high = prefixes;  // weight of the leading digit
    for (size_t p = 0; p < prefixes; ++p) {
        double tail = 0.0, head = 0.0;
        for (int a = 0; a < na; ++a) {
            tail += nu.weights[p * na + a];
            head += nu.weights[static_cast<size_t>(a) * high + p];
        }
        if (std::fabs(tail - head) > tol) return false;
    }
    return true;
}

}  // namespace ldmp::empirical
