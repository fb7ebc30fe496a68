#pragma once

#include "ldmp/common.hpp"
#include "ldmp/perron.hpp"

namespace ldmp::rational {

// Matrix-weighted measures on words: per-symbol non-negative matrices and a
// pair of positive boundary vectors assign each word the bilinear weight
// <y| prod M^(symbol) |x>. The enlarged chain carries the row/column labels
// alongside the symbols and is handled through its stochastic conjugate.

struct RationalModel {
    int alphabet_size = 0;
    std::vector<Mat> matrix_per_symbol;  // all square, shared dimension
    Vec x;                               // right boundary vector, positive
    Vec y;                               // left boundary vector, positive

    int matrix_dim() const { return matrix_per_symbol.empty() ? 0 : matrix_per_symbol[0].rows; }

    void validate() const {
        if (alphabet_size < 1) throw ValidationError("model: alphabet_size must be >= 1");
        if (static_cast<int>(matrix_per_symbol.size()) != alphabet_size)
            throw ValidationError("model: one matrix per symbol required");
        const int dim = matrix_dim();
        if (dim < 1) throw ValidationError("model: matrix dimension must be >= 1");
        for (const Mat& m : matrix_per_symbol) {
            if (!m.square() || m.rows != dim)
                throw ValidationError("model: matrices must be square with a shared dimension");
            if (!m.nonnegative()) throw ValidationError("model: matrix entries must be non-negative");
        }
        if (static_cast<int>(x.size()) != dim || static_cast<int>(y.size()) != dim)
            throw ValidationError("model: boundary vectors must match the matrix dimension");
        if (!all_positive(x) || !all_positive(y))
            throw ValidationError("model: boundary vectors must be strictly positive");
    }

    Mat symbol_sum() const {
        Mat m = matrix_per_symbol[0];
        for (size_t a = 1; a < matrix_per_symbol.size(); ++a) m = mat_add(m, matrix_per_symbol[a]);
        return m;
    }
};

/// A non-empty word over {0..alphabet_size-1}; symbols validated eagerly.
struct Word {
    int alphabet_size = 0;
    std::vector<int> symbols;

    Word() = default;
    Word(int a, std::vector<int> s) : alphabet_size(a), symbols(std::move(s)) {
        if (alphabet_size < 1) throw ValidationError("word: alphabet_size must be >= 1");
        if (symbols.empty()) throw ValidationError("word: must be non-empty");
        for (int c : symbols)
            if (c < 0 || c >= alphabet_size) throw ValidationError("word: symbol out of range");
    }

    int size() const { return static_cast<int>(symbols.size()); }
};

// ------------------------------------------------------------- weights

namespace detail {
constexpr double kUnderflowLog = -690.7755278982137;  // log(1e-300)

inline LogWeight scaled_product(const RationalModel& model, const std::vector<int>* symbols,
                                int steps, const Mat* fixed) {
    Vec v = model.y;
    double log_scale = 0.0;
    bool uf = false;
    for (int i = 0; i < steps; ++i) {
        const Mat& m = fixed ? *fixed : model.matrix_per_symbol[(*symbols)[i]];
        v = vec_mat(v, m);
        double mx = max_abs(v);
        if (mx <= 0.0) return LogWeight{-kInf, uf};
        if (log_scale + std::log(mx) < kUnderflowLog) uf = true;
        log_scale += std::log(mx);
        for (double& t : v) t /= mx;
    }
    double d = dot(v, model.x);
    if (d <= 0.0) return LogWeight{-kInf, uf};
    double lw = log_scale + std::log(d);
    if (lw < kUnderflowLog) uf = true;
    return LogWeight{lw, uf};
}
}  // namespace detail

/// Unnormalized word weight <y| prod_i M^(eta_i) |x>, tracked in log space.
inline LogWeight measure_weight(const RationalModel& model, const Word& eta) {
    if (eta.alphabet_size != model.alphabet_size)
        throw ValidationError("measure_weight: alphabet mismatch");
    return detail::scaled_product(model, &eta.symbols, eta.size(), nullptr);
}

/// Normalization Z_N = <y| M^N |x> with M the symbol sum.
inline LogWeight partition_function(const RationalModel& model, int n) {
    if (n < 1) throw ValidationError("partition_function: N must be >= 1");
    Mat m = model.symbol_sum();
    return detail::scaled_product(model, nullptr, n, &m);
}

/// mu_N(eta) = weight / Z_N.
inline double word_probability(const RationalModel& model, const Word& eta) {
    LogWeight w = measure_weight(model, eta);
    LogWeight z = partition_function(model, eta.size());
    if (z.is_zero()) throw ValidationError("word_probability: normalization vanished");
    if (w.is_zero()) return 0.0;
    return std::exp(w.log_value - z.log_value);
}

/// Joint weight y(zeta_1) * prod M^(eta_i)_{zeta_i, zeta_{i+1}} * x(zeta_{N+1}).
/// Dividing by Z_N gives the coupling measure; zero is a legitimate value.
inline double coupling_weight(const RationalModel& model, const Word& eta,
                              const std::vector<int>& zeta) {
    if (static_cast<int>(zeta.size()) != eta.size() + 1)
        throw ValidationError("coupling_weight: zeta must have length N+1");
    const int dim = model.matrix_dim();
    for (int b : zeta)
        if (b < 0 || b >= dim) throw ValidationError("coupling_weight: zeta label out of range");
    double w = model.y[zeta[0]];
    for (int i = 0; i < eta.size(); ++i) {
        w *= model.matrix_per_symbol[eta.symbols[i]](zeta[i], zeta[i + 1]);
        if (w == 0.0) return 0.0;
    }
    return w * model.x[zeta.back()];
}

// ------------------------------------------------------------- enlarged

/// Doob-conjugated chain on symbol/label pairs. State (a,b) is indexed
/// a * matrix_dim + b (row-major, fixed for reproducibility).
struct EnlargedChain {
    int alphabet_size = 0;
    int matrix_dim = 0;
    double lambda = 0.0;  // shared dominant eigenvalue of M and the block matrix
    Vec e;                // dominant right vector of M
    Vec epsilon;          // dominant right vector of the block matrix, over (a,b)
    Mat S;                // stochastic conjugate of M, dim x dim
    Mat S_frak;           // stochastic conjugate of the block matrix, (A*dim)^2
    Vec f;                // bridge entry weights over (a,b)
    Vec g;                // bridge exit weights over (a,b)

    int state(int a, int b) const { return a * matrix_dim + b; }
    int states() const { return alphabet_size * matrix_dim; }
};

/// Assemble the enlarged chain: dominant pair (lambda, e) of the symbol sum,
/// epsilon(a,b) = sum_b' M^(a)_{b,b'} e(b') / lambda, and the stochastic
/// conjugates. Requires every per-symbol row to carry some mass.
inline EnlargedChain build_enlarged(const RationalModel& model, double tol = 1e-12) {
    model.validate();
    const int dim = model.matrix_dim();
    const int na = model.alphabet_size;

    Mat m = model.symbol_sum();
    perron::PerronData pd = perron::perron_finite(m, tol);

    EnlargedChain chain;
    chain.alphabet_size = na;
    chain.matrix_dim = dim;
    chain.lambda = pd.value;
    chain.e = pd.right_vector;
    chain.S = perron::doob_transform(m, pd);

    chain.epsilon.assign(na * dim, 0.0);
    for (int a = 0; a < na; ++a)
        for (int b = 0; b < dim; ++b) {
            double s = 0.0;
            for (int bp = 0; bp < dim; ++bp) s += model.matrix_per_symbol[a](b, bp) * chain.e[bp];
            chain.epsilon[chain.state(a, b)] = s / pd.value;
        }
    if (!all_positive(chain.epsilon))
        throw NotPrimitiveError("build_enlarged: a per-symbol row has no support");

    const int ns = chain.states();
    chain.S_frak = Mat(ns, ns);
    for (int a = 0; a < na; ++a)
        for (int b = 0; b < dim; ++b) {
            const int row = chain.state(a, b);
            double rs = 0.0;
            for (int ap = 0; ap < na; ++ap)
                for (int bp = 0; bp < dim; ++bp) {
                    const int col = chain.state(ap, bp);
                    double v = model.matrix_per_symbol[a](b, bp) * chain.epsilon[col] /
                               (pd.value * chain.epsilon[row]);
                    chain.S_frak(row, col) = v;
                    rs += v;
                }
            for (int col = 0; col < ns; ++col) chain.S_frak(row, col) /= rs;
        }

    chain.f.assign(ns, 0.0);
    chain.g.assign(ns, 0.0);
    for (int a = 0; a < na; ++a)
        for (int b = 0; b < dim; ++b) {
            int s = chain.state(a, b);
            chain.f[s] = model.y[b] * chain.epsilon[s];
            chain.g[s] = model.x[b] / chain.epsilon[s];
        }
    return chain;
}

/// Theta(a,b) = theta(b) epsilon(a,b) / e(b) for theta stationary under S.
inline Vec theta_invariant(const EnlargedChain& chain, const Vec& theta) {
    if (static_cast<int>(theta.size()) != chain.matrix_dim)
        throw ValidationError("theta_invariant: theta size mismatch");
    Vec image = vec_mat(theta, chain.S);
    if (linf_diff(image, theta) > 1e-8)
        throw NotStationaryInputError("theta_invariant: theta is not stationary for S");
    Vec big(chain.states(), 0.0);
    for (int a = 0; a < chain.alphabet_size; ++a)
        for (int b = 0; b < chain.matrix_dim; ++b) {
            int s = chain.state(a, b);
            big[s] = theta[b] * chain.epsilon[s] / chain.e[b];
        }
    normalize_sum(big);
    return big;
}

// ------------------------------------------------------------- bridges

/// Endpoint-weighted Markov measure f(xi_1) prod P g(xi_{N+1}) / Z on
/// trajectories of length N+1. P only needs non-negative entries; the
/// backward vectors are renormalized per step with constants kept in logs.
struct BridgeLaw {
    Mat P;
    Vec f;
    Vec g;
    int horizon = 0;   // N: number of transitions
    double log_Z = -kInf;

    // back[k] is proportional to P^{N+1-k} g restricted per step, k in 1..N+1;
    // stored normalized with the log of the removed constant.
    std::vector<Vec> back;
    Vec back_log;

    int states() const { return P.rows; }
};

inline BridgeLaw make_bridge(Mat p, Vec f, Vec g, int horizon) {
    if (!p.square()) throw ValidationError("make_bridge: P must be square");
    if (!p.nonnegative()) throw ValidationError("make_bridge: P must be non-negative");
    const int n = p.rows;
    if (static_cast<int>(f.size()) != n || static_cast<int>(g.size()) != n)
        throw ValidationError("make_bridge: weight vector size mismatch");
    if (horizon < 1) throw ValidationError("make_bridge: horizon must be >= 1");

    BridgeLaw law;
    law.P = std::move(p);
    law.f = std::move(f);
    law.g = std::move(g);
    law.horizon = horizon;
    law.back.assign(horizon + 2, Vec());
    law.back_log.assign(horizon + 2, 0.0);

    Vec u = law.g;
    double lg = 0.0;
    double mx = max_abs(u);
    if (mx > 0.0) {
        for (double& v : u) v /= mx;
        lg = std::log(mx);
    }
    law.back[horizon + 1] = u;
    law.back_log[horizon + 1] = lg;
    for (int k = horizon; k >= 1; --k) {
        u = mat_vec(law.P, u);
        mx = max_abs(u);
        if (mx > 0.0) {
            for (double& v : u) v /= mx;
            lg += std::log(mx);
        }
        law.back[k] = u;
        law.back_log[k] = lg;
    }
    double z0 = dot(law.f, law.back[1]);
    law.log_Z = z0 > 0.0 ? law.back_log[1] + std::log(z0) : -kInf;
    return law;
}

/// Probability of one trajectory xi (length N+1) under the bridge.
inline double bridge_probability(const BridgeLaw& law, const std::vector<int>& xi) {
    if (static_cast<int>(xi.size()) != law.horizon + 1)
        throw ValidationError("bridge_probability: trajectory must have length N+1");
    if (law.log_Z == -kInf) return 0.0;
    double lw = 0.0;
    if (law.f[xi.front()] <= 0.0 || law.g[xi.back()] <= 0.0) return 0.0;
    lw += std::log(law.f[xi.front()]) + std::log(law.g[xi.back()]);
    for (int i = 0; i < law.horizon; ++i) {
        double t = law.P(xi[i], xi[i + 1]);
        if (t <= 0.0) return 0.0;
        lw += std::log(t);
    }
    return std::exp(lw - law.log_Z);
}

/// Joint law of (xi_1, xi_{N+1}): f(s) (P^N)_{s,e} g(e) / Z.
inline Mat bridge_endpoint_law(const BridgeLaw& law) {
    if (law.log_Z == -kInf) throw DegenerateLawError("bridge_endpoint_law: Z = 0");
    ScaledMat pn = mat_pow_scaled(law.P, static_cast<unsigned long long>(law.horizon));
    const int n = law.states();
    Mat out(n, n);
    for (int s = 0; s < n; ++s)
        for (int e = 0; e < n; ++e) {
            double v = law.f[s] * pn.m(s, e) * law.g[e];
            out(s, e) = v > 0.0 ? std::exp(std::log(v) + pn.log_scale - law.log_Z) : 0.0;
        }
    return out;
}

/// Exact sample by backward filtering: xi_1 from f * (P^N g), then forward
/// with kernel proportional to P(xi_k, .) * back_{k+1}(.).
inline std::vector<int> sample_bridge(const BridgeLaw& law, std::mt19937_64& rng) {
    if (law.log_Z == -kInf) throw DegenerateLawError("sample_bridge: Z = 0");
    const int n = law.states();
    std::vector<int> xi(law.horizon + 1);
    Vec w(n, 0.0);
    for (int s = 0; s < n; ++s) w[s] = law.f[s] * law.back[1][s];
    xi[0] = draw_weighted(w, sum(w), rng);
    for (int k = 1; k <= law.horizon; ++k) {
        const Vec& nxt = law.back[k + 1];
        double total = 0.0;
        for (int s = 0; s < n; ++s) {
            w[s] = law.P(xi[k - 1], s) * nxt[s];
            total += w[s];
        }
        xi[k] = draw_weighted(w, total, rng);
    }
    return xi;
}

inline std::vector<int> sample_bridge(const BridgeLaw& law, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_bridge(law, rng);
}

/// Bridge representation of the coupling measure of a model.
inline BridgeLaw enlarged_bridge(const EnlargedChain& chain, int horizon) {
    return make_bridge(chain.S_frak, chain.f, chain.g, horizon);
}

/// Stationary pair law of the enlarged chain projected to symbol pairs:
/// nu2(a,a') = sum_{b,b'} Theta(a,b) S_frak[(a,b),(a',b')].
inline Vec stationary_symbol_pair_law(const EnlargedChain& chain) {
    Vec theta = perron::stationary_distribution(chain.S, 1e-14);
    Vec big = theta_invariant(chain, theta);
    const int na = chain.alphabet_size;
    Vec nu2(na * na, 0.0);
    for (int a = 0; a < na; ++a)
        for (int b = 0; b < chain.matrix_dim; ++b) {
            int row = chain.state(a, b);
            for (int ap = 0; ap < na; ++ap)
                for (int bp = 0; bp < chain.matrix_dim; ++bp)
                    nu2[a * na + ap] += big[row] * chain.S_frak(row, chain.state(ap, bp));
        }
    normalize_sum(nu2);
    return nu2;
}

}  // namespace ldmp::rational
