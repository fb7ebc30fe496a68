#pragma once

#include "ldmp/common.hpp"
#include "ldmp/rational.hpp"

namespace ldmp::tasep {

// Boundary-driven totally asymmetric exclusion: matrix-weighted measure with
// the explicit countable representation (two bidiagonal 0/1 matrices and
// geometric boundary vectors), its stochastic enlarged chain, the simplified
// homogeneous walk, samplers, empirical observables and the generator oracle.

struct TasepParams {
    double alpha = 0.0;
    double beta = 0.0;
    int n = 0;

    double a() const { return (1.0 - alpha) / alpha; }
    double b() const { return (1.0 - beta) / beta; }
    double khat() const { return std::sqrt((alpha + beta - 1.0) / (alpha * beta)); }

    void validate() const {
        if (!(alpha > 0.0 && alpha <= 1.0) || !(beta > 0.0 && beta <= 1.0))
            throw ValidationError("tasep: alpha and beta must lie in (0,1]");
        if (n < 1) throw ValidationError("tasep: system size must be >= 1");
        if (!(a() * b() < 1.0))
            throw RegionViolationError("tasep: representation requires a*b < 1 (alpha+beta > 1)");
    }
};

/// Infinite-representation matrix entries. Symbol 0 steps the label down or
/// keeps it; symbol 1 keeps it or steps it up. All nonzero entries are 1.
inline double entry_m(int a, int b, int bp) {
    if (b < 0 || bp < 0) return 0.0;
    if (a == 0) return (bp == b || bp == b - 1) ? 1.0 : 0.0;
    return (bp == b || bp == b + 1) ? 1.0 : 0.0;
}

// ------------------------------------------------------------- step laws

/// Probability weights on {0,1} x {-1,0,+1}; storage index a*3 + (s+1).
struct StepLaw {
    double w[6] = {0, 0, 0, 0, 0, 0};

    static int idx(int a, int s) { return a * 3 + s + 1; }
    double at(int a, int s) const { return w[idx(a, s)]; }
    double& at(int a, int s) { return w[idx(a, s)]; }
    double total() const {
        double t = 0.0;
        for (double v : w) t += v;
        return t;
    }
};

inline StepLaw mu_interior() {
    StepLaw m;
    m.at(0, 0) = m.at(0, -1) = m.at(1, 0) = m.at(1, 1) = 0.25;
    return m;
}

inline StepLaw mu_boundary() {
    StepLaw m;
    m.at(0, 0) = 0.5;
    m.at(1, 0) = m.at(1, 1) = 0.25;
    return m;
}

// ------------------------------------------------------------- truncated model

namespace detail {

// Left action of the truncated symbol matrices / their sum on a row vector.
inline Vec left_apply_m0(const Vec& v) {
    const int nb = static_cast<int>(v.size());
    Vec out(nb, 0.0);
    for (int j = 0; j < nb; ++j) out[j] = v[j] + (j + 1 < nb ? v[j + 1] : 0.0);
    return out;
}
inline Vec left_apply_m1(const Vec& v) {
    const int nb = static_cast<int>(v.size());
    Vec out(nb, 0.0);
    for (int j = 0; j < nb; ++j) out[j] = v[j] + (j >= 1 ? v[j - 1] : 0.0);
    return out;
}
inline Vec left_apply_sum(const Vec& v) {
    const int nb = static_cast<int>(v.size());
    Vec out(nb, 0.0);
    for (int j = 0; j < nb; ++j)
        out[j] = 2.0 * v[j] + (j + 1 < nb ? v[j + 1] : 0.0) + (j >= 1 ? v[j - 1] : 0.0);
    return out;
}

inline Vec boundary_vec(double ratio, double khat, int nb) {
    Vec v(nb);
    for (int i = 0; i < nb; ++i) v[i] = khat * std::pow(ratio, i);
    return v;
}

inline double log_partition_at(const TasepParams& p, int b_max) {
    const int nb = b_max + 1;
    Vec y = boundary_vec(p.a(), p.khat(), nb);
    Vec x = boundary_vec(p.b(), p.khat(), nb);
    Vec v = y;
    double log_scale = 0.0;
    for (int i = 0; i < p.n; ++i) {
        v = left_apply_sum(v);
        double mx = max_abs(v);
        if (mx <= 0.0) return -kInf;
        log_scale += std::log(mx);
        for (double& t : v) t /= mx;
    }
    double d = dot(v, x);
    return log_scale + std::log(d);
}

}  // namespace detail

/// Truncation to labels {0..b_max}, chosen by doubling from N+2 until the
/// normalization stabilizes. Vectors are stored; matrix entries are banded
/// accessors (a dense model is materialized on demand only).
struct TruncatedTasepModel {
    TasepParams params;
    int b_max = 0;
    double truncation_error_bound = 0.0;
    double log_z = 0.0;
    Vec x, y;  // length b_max + 1

    double m(int a, int b, int bp) const {
        if (b > b_max || bp > b_max) return 0.0;
        return entry_m(a, b, bp);
    }

    rational::RationalModel to_rational_model() const {
        if (b_max > 4096) throw SizeLimitError("to_rational_model: truncation too large for dense form");
        rational::RationalModel rm;
        rm.alphabet_size = 2;
        rm.matrix_per_symbol.assign(2, Mat(b_max + 1, b_max + 1));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b <= b_max; ++b)
                for (int bp = 0; bp <= b_max; ++bp) rm.matrix_per_symbol[a](b, bp) = m(a, b, bp);
        rm.x = x;
        rm.y = y;
        return rm;
    }
};

inline TruncatedTasepModel build_tasep(const TasepParams& params, double rel_tol = 1e-12) {
    params.validate();
    int b_max = params.n + 2;
    double prev = detail::log_partition_at(params, b_max);
    double bound = kInf;
    while (true) {
        int next = 2 * b_max;
        if (next > (1 << 16)) throw TruncationFailureError("build_tasep: truncation did not stabilize");
        double cur = detail::log_partition_at(params, next);
        bound = std::fabs(cur - prev);
        b_max = next;
        prev = cur;
        if (bound < rel_tol) break;
    }
    TruncatedTasepModel model;
    model.params = params;
    model.b_max = b_max;
    model.truncation_error_bound = bound;
    model.log_z = prev;
    model.y = detail::boundary_vec(params.a(), params.khat(), b_max + 1);
    model.x = detail::boundary_vec(params.b(), params.khat(), b_max + 1);
    return model;
}

/// Truncation pinned by the caller; the stored error bound is the change of
/// log Z_N when the box is doubled once more.
inline TruncatedTasepModel build_tasep_fixed(const TasepParams& params, int b_max) {
    params.validate();
    if (b_max < 1 || b_max > (1 << 16)) throw ValidationError("build_tasep_fixed: bad b_max");
    TruncatedTasepModel model;
    model.params = params;
    model.b_max = b_max;
    model.log_z = detail::log_partition_at(params, b_max);
    model.truncation_error_bound =
        std::fabs(detail::log_partition_at(params, 2 * b_max) - model.log_z);
    model.y = detail::boundary_vec(params.a(), params.khat(), b_max + 1);
    model.x = detail::boundary_vec(params.b(), params.khat(), b_max + 1);
    return model;
}

/// mu_N(eta) via the truncated matrix products.
inline double tasep_probability(const TruncatedTasepModel& model, const std::vector<int>& eta) {
    if (static_cast<int>(eta.size()) != model.params.n)
        throw ValidationError("tasep_probability: word length must equal the system size");
    Vec v = model.y;
    double log_scale = 0.0;
    for (int c : eta) {
        if (c != 0 && c != 1) throw ValidationError("tasep_probability: symbols must be 0/1");
        v = c == 0 ? detail::left_apply_m0(v) : detail::left_apply_m1(v);
        double mx = max_abs(v);
        if (mx <= 0.0) return 0.0;
        log_scale += std::log(mx);
        for (double& t : v) t /= mx;
    }
    double d = dot(v, model.x);
    if (d <= 0.0) return 0.0;
    return std::exp(log_scale + std::log(d) - model.log_z);
}

// ------------------------------------------------------------- chain entries

/// Stochastic enlarged chain entry: (1/4) h(a',b')/h(a,b) M^(a)_{b,b'} with
/// h(a,b) = 2(a+b)+1.
inline double frak_S_entry(int a, int b, int ap, int bp) {
    double m = entry_m(a, b, bp);
    if (m == 0.0) return 0.0;
    return 0.25 * (2.0 * (bp + ap) + 1.0) / (2.0 * (b + a) + 1.0) * m;
}

/// Homogeneous effective walk: next symbol uniform; the label steps down or
/// stays for symbol 0 (held at the boundary), stays or steps up for symbol 1.
inline double effective_S_entry(int a, int b, int ap, int bp) {
    (void)ap;
    if (a == 0 && b == 0) return bp == 0 ? 0.5 : 0.0;
    if (a == 0) return (bp == b || bp == b - 1) ? 0.25 : 0.0;
    return (bp == b || bp == b + 1) ? 0.25 : 0.0;
}

// ------------------------------------------------------------- samplers

struct PathSample {
    std::vector<int> eta;   // length N+1
    std::vector<int> zeta;  // length N+1
    double log_rn = 0.0;    // log density against the unperturbed walk
};

namespace detail {

inline std::pair<int, int> draw_step(const StepLaw& law, std::mt19937_64& rng) {
    double u = next_double(rng) * law.total();
    double acc = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int s = -1; s <= 1; ++s) {
            double w = law.at(a, s);
            if (w <= 0.0) continue;
            acc += w;
            if (u < acc) return {a, s};
        }
    return {1, 1};
}

}  // namespace detail

/// Exact sample of the effective walk started from Bernoulli(1/2) symbol and
/// a fixed label, built from the i.i.d. interior/boundary step draws with the
/// dedicated first-step rule.
inline PathSample sample_effective(int n, int z0_index, std::mt19937_64& rng) {
    if (n < 1 || z0_index < 0) throw ValidationError("sample_effective: bad arguments");
    PathSample out;
    out.eta.resize(n + 1);
    out.zeta.resize(n + 1);
    out.zeta[0] = z0_index;
    out.eta[0] = next_double(rng) < 0.5 ? 0 : 1;
    if (out.eta[0] == 0 && out.zeta[0] == 0)
        out.zeta[1] = 0;
    else
        out.zeta[1] = next_double(rng) < 0.5 ? out.zeta[0] : out.zeta[0] + 2 * out.eta[0] - 1;
    const StepLaw mi = mu_interior(), mb = mu_boundary();
    for (int i = 1; i < n; ++i) {
        const StepLaw& law = out.zeta[i] > 0 ? mi : mb;
        auto [a, s] = detail::draw_step(law, rng);
        out.eta[i] = a;
        out.zeta[i + 1] = out.zeta[i] + s;
    }
    out.eta[n] = next_double(rng) < 0.5 ? 0 : 1;
    return out;
}

/// Sample of the perturbed walk: step i uses the interior or boundary tilt
/// evaluated in the spatial bin of i/N. The log density ratio against the
/// unperturbed walk is accumulated alongside.
inline PathSample sample_tilted(const std::vector<StepLaw>& gamma_i,
                                const std::vector<StepLaw>& gamma_b, int n, int z0_index,
                                std::mt19937_64& rng) {
    if (gamma_i.empty() || gamma_i.size() != gamma_b.size())
        throw ValidationError("sample_tilted: tilts need one law per bin, same bin count");
    const StepLaw mi = mu_interior(), mb = mu_boundary();
    auto check = [](const std::vector<StepLaw>& laws, const StepLaw& ref, const char* which) {
        for (const StepLaw& g : laws) {
            if (std::fabs(g.total() - 1.0) > 1e-9)
                throw ValidationError(std::string("sample_tilted: ") + which + " law does not sum to 1");
            for (int a = 0; a < 2; ++a)
                for (int s = -1; s <= 1; ++s)
                    if (g.at(a, s) > 0.0 && ref.at(a, s) == 0.0)
                        throw SupportViolationError(
                            std::string("sample_tilted: ") + which + " law charges outside the base support");
        }
    };
    check(gamma_i, mi, "interior");
    check(gamma_b, mb, "boundary");

    const int bins = static_cast<int>(gamma_i.size());
    PathSample out;
    out.eta.resize(n + 1);
    out.zeta.resize(n + 1);
    out.zeta[0] = z0_index;
    for (int i = 1; i <= n; ++i) {
        long long jj = (static_cast<long long>(i) * bins + n - 1) / n;  // ceil(i*bins/n)
        int bin = static_cast<int>(jj) - 1;
        bin = std::min(std::max(bin, 0), bins - 1);
        bool interior = out.zeta[i - 1] > 0;
        const StepLaw& g = interior ? gamma_i[bin] : gamma_b[bin];
        const StepLaw& base = interior ? mi : mb;
        auto [a, s] = detail::draw_step(g, rng);
        out.eta[i - 1] = a;
        out.zeta[i] = out.zeta[i - 1] + s;
        out.log_rn += std::log(g.at(a, s) / base.at(a, s));
    }
    out.eta[n] = next_double(rng) < 0.5 ? 0 : 1;
    return out;
}

// ------------------------------------------------------------- bridge

/// Endpoint-weighted measure of the enlarged chain on the truncated label
/// box, with banded backward filtering. The symbol marginal of its samples
/// coincides with tasep_probability at the same truncation.
struct TasepBridge {
    int n = 0;
    int b_max = 0;
    Vec f, g;                 // over states (a,b), index a*(b_max+1)+b
    std::vector<Vec> back;    // back[k], k = 1..n+1, renormalized
    Vec back_log;
    double log_Z = -kInf;

    int state(int a, int b) const { return a * (b_max + 1) + b; }
    int states() const { return 2 * (b_max + 1); }
};

namespace detail {

inline void successors(int a, int b, int b_max, int* bs, int* count) {
    // label moves reachable from (a,b); the next symbol is free.
    int c = 0;
    if (a == 0) {
        bs[c++] = b;
        if (b >= 1) bs[c++] = b - 1;
    } else {
        bs[c++] = b;
        if (b + 1 <= b_max) bs[c++] = b + 1;
    }
    *count = c;
}

}  // namespace detail

inline TasepBridge make_tasep_bridge(const TruncatedTasepModel& model, int n) {
    if (n < 1) throw ValidationError("make_tasep_bridge: horizon must be >= 1");
    const int b_max = model.b_max;
    const int ns = 2 * (b_max + 1);
    if (static_cast<double>(n + 2) * ns > 6.4e7)
        throw SizeLimitError("make_tasep_bridge: backward storage too large");
    const double av = model.params.a(), bv = model.params.b();

    TasepBridge br;
    br.n = n;
    br.b_max = b_max;
    br.f.assign(ns, 0.0);
    br.g.assign(ns, 0.0);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b <= b_max; ++b) {
            double h = 2.0 * (a + b) + 1.0;
            br.f[br.state(a, b)] = std::pow(av, b) * h / 4.0;
            br.g[br.state(a, b)] = 4.0 * std::pow(bv, b) / h;
        }

    br.back.assign(n + 2, Vec());
    br.back_log.assign(n + 2, 0.0);
    Vec u = br.g;
    double lg = 0.0;
    auto renorm = [&](Vec& v) {
        double mx = max_abs(v);
        if (mx > 0.0) {
            for (double& t : v) t /= mx;
            lg += std::log(mx);
        }
    };
    renorm(u);
    br.back[n + 1] = u;
    br.back_log[n + 1] = lg;
    int bs[2], cnt;
    for (int k = n; k >= 1; --k) {
        Vec nxt(ns, 0.0);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b <= b_max; ++b) {
                detail::successors(a, b, b_max, bs, &cnt);
                double s = 0.0;
                for (int c = 0; c < cnt; ++c)
                    for (int ap = 0; ap < 2; ++ap)
                        s += frak_S_entry(a, b, ap, bs[c]) * u[br.state(ap, bs[c])];
                nxt[br.state(a, b)] = s;
            }
        u = std::move(nxt);
        renorm(u);
        br.back[k] = u;
        br.back_log[k] = lg;
    }
    double z0 = dot(br.f, br.back[1]);
    br.log_Z = z0 > 0.0 ? br.back_log[1] + std::log(z0) : -kInf;
    if (br.log_Z == -kInf) throw DegenerateLawError("make_tasep_bridge: zero normalization");
    return br;
}

inline PathSample sample_tasep_bridge(const TasepBridge& br, std::mt19937_64& rng) {
    PathSample out;
    out.eta.resize(br.n + 1);
    out.zeta.resize(br.n + 1);
    const int ns = br.states();
    Vec w(ns, 0.0);
    for (int s = 0; s < ns; ++s) w[s] = br.f[s] * br.back[1][s];
    int cur = draw_weighted(w, sum(w), rng);
    out.eta[0] = cur / (br.b_max + 1);
    out.zeta[0] = cur % (br.b_max + 1);
    int bs[2], cnt;
    for (int k = 1; k <= br.n; ++k) {
        int a = out.eta[k - 1], b = out.zeta[k - 1];
        detail::successors(a, b, br.b_max, bs, &cnt);
        double opts[4];
        int oa[4], ob[4];
        int m = 0;
        double total = 0.0;
        for (int c = 0; c < cnt; ++c)
            for (int ap = 0; ap < 2; ++ap) {
                double v = frak_S_entry(a, b, ap, bs[c]) * br.back[k + 1][br.state(ap, bs[c])];
                opts[m] = v;
                oa[m] = ap;
                ob[m] = bs[c];
                total += v;
                ++m;
            }
        double u = next_double(rng) * total;
        double acc = 0.0;
        int pick = m - 1;
        for (int i = 0; i < m; ++i) {
            acc += opts[i];
            if (u < acc) {
                pick = i;
                break;
            }
        }
        out.eta[k] = oa[pick];
        out.zeta[k] = ob[pick];
    }
    return out;
}

/// One-call form; builds the truncation internally.
inline PathSample sample_tasep_bridge(const TasepParams& params, int n, std::uint64_t seed) {
    TasepParams p = params;
    p.n = n;
    TruncatedTasepModel model = build_tasep(p);
    TasepBridge br = make_tasep_bridge(model, n);
    std::mt19937_64 rng(seed);
    return sample_tasep_bridge(br, rng);
}

/// Probability of one (eta, zeta) trajectory under the truncated bridge.
inline double tasep_bridge_probability(const TasepBridge& br, const std::vector<int>& eta,
                                       const std::vector<int>& zeta) {
    if (static_cast<int>(eta.size()) != br.n + 1 || static_cast<int>(zeta.size()) != br.n + 1)
        throw ValidationError("tasep_bridge_probability: trajectories have length N+1");
    double lw = 0.0;
    int s0 = br.state(eta[0], zeta[0]);
    if (br.f[s0] <= 0.0) return 0.0;
    lw += std::log(br.f[s0]);
    for (int k = 0; k < br.n; ++k) {
        double t = frak_S_entry(eta[k], zeta[k], eta[k + 1], zeta[k + 1]);
        if (zeta[k + 1] > br.b_max || t <= 0.0) return 0.0;
        lw += std::log(t);
    }
    int se = br.state(eta[br.n], zeta[br.n]);
    if (br.g[se] <= 0.0) return 0.0;
    lw += std::log(br.g[se]);
    return std::exp(lw - br.log_Z);
}

// ------------------------------------------------------------- observables

/// Binned triple: rescaled label path, boundary/interior step measures and
/// the boundary occupation measure.
struct TripleEmpirical {
    int n = 0;
    int bins = 0;
    Vec z_grid;       // length n+1, z(i/n) = zeta_{i+1}/n
    Vec pi_b;         // boundary time mass per bin
    Vec pi_big_b;     // bins x 6 step-law masses, boundary part
    Vec pi_big_i;     // bins x 6, interior part

    double z_at(double x) const {
        if (x <= 0.0) return z_grid.front();
        if (x >= 1.0) return z_grid.back();
        double t = x * n;
        int i = static_cast<int>(t);
        double frac = t - i;
        return z_grid[i] * (1.0 - frac) + z_grid[i + 1] * frac;
    }

    double big_b(int bin, int a, int s) const { return pi_big_b[bin * 6 + StepLaw::idx(a, s)]; }
    double big_i(int bin, int a, int s) const { return pi_big_i[bin * 6 + StepLaw::idx(a, s)]; }
};

inline TripleEmpirical triple_empirical(const std::vector<int>& eta, const std::vector<int>& zeta,
                                        int bins) {
    if (eta.size() != zeta.size() || eta.size() < 2)
        throw ValidationError("triple_empirical: paths must share length N+1 >= 2");
    if (bins < 1) throw ValidationError("triple_empirical: bins must be >= 1");
    const int n = static_cast<int>(eta.size()) - 1;
    TripleEmpirical t;
    t.n = n;
    t.bins = bins;
    t.z_grid.resize(n + 1);
    for (int i = 0; i <= n; ++i) t.z_grid[i] = static_cast<double>(zeta[i]) / n;
    t.pi_b.assign(bins, 0.0);
    t.pi_big_b.assign(static_cast<size_t>(bins) * 6, 0.0);
    t.pi_big_i.assign(static_cast<size_t>(bins) * 6, 0.0);
    for (int i = 1; i <= n; ++i) {
        long long jj = (static_cast<long long>(i) * bins + n - 1) / n;
        int bin = static_cast<int>(jj) - 1;
        int s = zeta[i] - zeta[i - 1];
        int a = eta[i - 1];
        if (s < -1 || s > 1 || (a != 0 && a != 1) || zeta[i - 1] < 0)
            throw ValidationError("triple_empirical: not a nearest-neighbour walk path");
        size_t slot = static_cast<size_t>(bin) * 6 + StepLaw::idx(a, s);
        if (zeta[i - 1] == 0) {
            t.pi_big_b[slot] += 1.0 / n;
            t.pi_b[bin] += 1.0 / n;
        } else {
            t.pi_big_i[slot] += 1.0 / n;
        }
    }
    return t;
}

// ------------------------------------------------------------- generator

/// Exact stationary law of the continuous-time generator on {0,1}^N, by
/// uniformized fixed-point iteration with a residual certificate. Words are
/// indexed big-endian: site 1 is the most significant bit.
inline Vec generator_stationary(const TasepParams& params) {
    params.validate();
    const int n = params.n;
    if (n > 12) throw SizeLimitError("generator_stationary: N must be <= 12");
    const size_t ns = size_t{1} << n;
    auto bit = [n](size_t c, int site) { return (c >> (n - site)) & 1u; };  // site in 1..n

    struct Move {
        size_t to;
        double rate;
    };
    std::vector<std::vector<Move>> moves(ns);
    std::vector<double> exit(ns, 0.0);
    for (size_t c = 0; c < ns; ++c) {
        for (int i = 1; i < n; ++i)
            if (bit(c, i) == 1 && bit(c, i + 1) == 0) {
                size_t to = c ^ (size_t{1} << (n - i)) ^ (size_t{1} << (n - i - 1));
                moves[c].push_back({to, 1.0});
                exit[c] += 1.0;
            }
        if (bit(c, 1) == 0) {
            moves[c].push_back({c | (size_t{1} << (n - 1)), params.alpha});
            exit[c] += params.alpha;
        }
        if (bit(c, n) == 1) {
            moves[c].push_back({c & ~size_t{1}, params.beta});
            exit[c] += params.beta;
        }
    }
    const double uni = n - 1 + params.alpha + params.beta + 1e-9;
    Vec pi(ns, 1.0 / static_cast<double>(ns));
    Vec nxt(ns, 0.0);
    for (int it = 0; it < 2000000; ++it) {
        std::fill(nxt.begin(), nxt.end(), 0.0);
        for (size_t c = 0; c < ns; ++c) {
            double stay = pi[c] * (1.0 - exit[c] / uni);
            nxt[c] += stay;
            for (const Move& m : moves[c]) nxt[m.to] += pi[c] * m.rate / uni;
        }
        double resid = linf_diff(nxt, pi);
        pi.swap(nxt);
        normalize_sum(pi);
        if (resid * uni < 1e-14) break;
    }
    // certificate: pi L = 0
    Vec balance(ns, 0.0);
    for (size_t c = 0; c < ns; ++c) {
        balance[c] -= pi[c] * exit[c];
        for (const Move& m : moves[c]) balance[m.to] += pi[c] * m.rate;
    }
    if (max_abs(balance) > 1e-12)
        throw NoConvergenceError("generator_stationary: residual certificate failed");
    return pi;
}

// ------------------------------------------------------------- phase data

struct RhoBar {
    double value = 0.0;
    bool ambiguous = false;
};

/// Limiting density by the standard 1/2-threshold phase rules; inside the
/// admissible region exactly one rule applies.
inline RhoBar rho_bar(const TasepParams& params) {
    params.validate();
    const double eps = 1e-9;
    RhoBar r;
    r.ambiguous = std::fabs(params.alpha - 0.5) < eps || std::fabs(params.beta - 0.5) < eps;
    if (params.alpha >= 0.5 && params.beta >= 0.5)
        r.value = 0.5;
    else if (params.alpha < 0.5)
        r.value = params.alpha;
    else
        r.value = 1.0 - params.beta;
    return r;
}

struct LdConstants {
    double C = 0.0;
    double C_prime = 0.0;
};

inline LdConstants ld_constants(const TasepParams& params) {
    double rb = rho_bar(params).value;
    LdConstants c;
    c.C = -std::log(4.0) - std::log(rb * (1.0 - rb));
    c.C_prime = c.C + std::log(4.0);
    return c;
}

// ------------------------------------------------------------- fluid limit

struct FluidSolution {
    Vec z;  // grid+1 values
    Vec m;  // grid values
};

/// Forward Euler for the limiting label path under piecewise-constant tilts,
/// with the sticky rule at z = 0: the boundary fraction m solves the zero
/// drift balance whenever the interior drift pushes downward.
inline FluidSolution fluid_limit_ode(const std::vector<StepLaw>& gamma_i,
                                     const std::vector<StepLaw>& gamma_b, double z0, int grid) {
    if (gamma_i.empty() || gamma_i.size() != gamma_b.size())
        throw ValidationError("fluid_limit_ode: tilts need one law per bin, same bin count");
    if (z0 < 0.0 || grid < 1) throw ValidationError("fluid_limit_ode: bad arguments");
    const int bins = static_cast<int>(gamma_i.size());
    FluidSolution sol;
    sol.z.assign(grid + 1, 0.0);
    sol.m.assign(grid, 0.0);
    sol.z[0] = z0;
    for (int j = 0; j < grid; ++j) {
        long long jj = (static_cast<long long>(j + 1) * bins + grid - 1) / grid;
        int bin = std::min(std::max(static_cast<int>(jj) - 1, 0), bins - 1);
        const StepLaw& gi = gamma_i[bin];
        const StepLaw& gb = gamma_b[bin];
        double drift_i = gi.at(1, 1) - gi.at(0, -1);
        double m = 0.0;
        double zdot = drift_i;
        if (sol.z[j] <= 1e-12 && drift_i <= 0.0) {
            double denom = gb.at(1, 1) + gi.at(0, -1) - gi.at(1, 1);
            m = denom > 0.0 ? (gi.at(0, -1) - gi.at(1, 1)) / denom : 0.0;
            zdot = 0.0;  // the boundary fraction balances the drift exactly
        }
        sol.m[j] = m;
        sol.z[j + 1] = std::max(0.0, sol.z[j] + zdot / grid);
    }
    return sol;
}

}  // namespace ldmp::tasep
