#pragma once

#include <future>

#include "ldmp/common.hpp"
#include "ldmp/empirical.hpp"
#include "ldmp/rational.hpp"
#include "ldmp/tasep.hpp"

namespace ldmp::verify {

// Desk-scale probes: exhaustive word distributions, finite-size decay-rate
// curves for ball events, and pointwise sandwich bounds between measures.

constexpr size_t kEnumLimit = size_t{1} << 20;

namespace detail {

inline size_t pow_size(int base, int exp) {
    size_t p = 1;
    for (int i = 0; i < exp; ++i) p *= static_cast<size_t>(base);
    return p;
}

/// DFS over suffixes, carrying the left partial product. The 8 leading
/// prefix classes run concurrently; the output slots are disjoint.
template <typename Step, typename Finish>
void enumerate_weights(int alphabet, int n, const Vec& start, Step step, Finish finish,
                       Vec& out) {
    int prefix_len = 0;
    size_t classes = 1;
    while (classes < 8 && prefix_len < n) {
        classes *= static_cast<size_t>(alphabet);
        ++prefix_len;
    }
    const size_t suffix = pow_size(alphabet, n - prefix_len);

    auto run_class = [&](size_t cls) {
        std::vector<int> word(n, 0);
        size_t rem = cls;
        for (int i = prefix_len - 1; i >= 0; --i) {
            word[i] = static_cast<int>(rem % alphabet);
            rem /= alphabet;
        }
        Vec v = start;
        for (int i = 0; i < prefix_len; ++i) v = step(v, word[i]);
        // iterative DFS over the remaining positions
        std::vector<Vec> stack(n - prefix_len + 1);
        stack[0] = std::move(v);
        std::vector<int> digit(n - prefix_len, 0);
        int depth = 0;
        size_t base_idx = cls * suffix;
        size_t offset = 0;
        while (true) {
            if (depth == n - prefix_len) {
                out[base_idx + offset] = finish(stack[depth]);
                ++offset;
                --depth;
                while (depth >= 0 && digit[depth] == alphabet - 1) --depth;
                if (depth < 0) break;
                ++digit[depth];
                stack[depth + 1] = step(stack[depth], digit[depth]);
                ++depth;
                for (int d = depth; d < n - prefix_len; ++d) digit[d] = 0;
            } else {
                digit[depth] = 0;
                stack[depth + 1] = step(stack[depth], 0);
                ++depth;
            }
        }
    };

    std::vector<std::future<void>> jobs;
    for (size_t cls = 0; cls < classes; ++cls)
        jobs.push_back(std::async(std::launch::async, run_class, cls));
    for (auto& j : jobs) j.get();  // fixed join order
}

}  // namespace detail

/// Full distribution over A^N of a finite model, indexed big-endian.
inline Vec enumerate_exact(const rational::RationalModel& model, int n) {
    model.validate();
    if (n < 1) throw ValidationError("enumerate_exact: N must be >= 1");
    size_t total = detail::pow_size(model.alphabet_size, n);
    if (total > kEnumLimit) throw SizeLimitError("enumerate_exact: |A|^N exceeds the limit");
    Vec out(total, 0.0);
    detail::enumerate_weights(
        model.alphabet_size, n, model.y,
        [&](const Vec& v, int a) { return vec_mat(v, model.matrix_per_symbol[a]); },
        [&](const Vec& v) { return dot(v, model.x); }, out);
    double z = sum(out);
    if (z <= 0.0) throw ValidationError("enumerate_exact: total weight vanished");
    for (double& v : out) v /= z;
    return out;
}

/// Full distribution over {0,1}^N of the truncated exclusion measure.
inline Vec enumerate_exact(const tasep::TruncatedTasepModel& model) {
    const int n = model.params.n;
    size_t total = size_t{1} << n;
    if (total > kEnumLimit) throw SizeLimitError("enumerate_exact: 2^N exceeds the limit");
    Vec out(total, 0.0);
    detail::enumerate_weights(
        2, n, model.y,
        [&](const Vec& v, int a) {
            return a == 0 ? tasep::detail::left_apply_m0(v) : tasep::detail::left_apply_m1(v);
        },
        [&](const Vec& v) { return dot(v, model.x); }, out);
    double z = sum(out);
    for (double& v : out) v /= z;
    return out;
}

inline Vec enumerate_exact(const tasep::TasepParams& params, int n) {
    tasep::TasepParams p = params;
    p.n = n;
    return enumerate_exact(tasep::build_tasep(p));
}

// ------------------------------------------------------------- intervals

struct WilsonInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// 95% Wilson score interval.
inline WilsonInterval wilson95(long long count, long long trials) {
    if (trials <= 0) return {};
    const double z = 1.959963984540054;
    double n = static_cast<double>(trials);
    double phat = static_cast<double>(count) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (phat + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(phat * (1.0 - phat) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// ------------------------------------------------------------- LD curves

struct LDEstimate {
    std::vector<int> ns;
    Vec probability;
    Vec wilson_lo, wilson_hi;  // equal to probability when exact
    Vec rate;                  // -(1/N) log P
    std::vector<char> exact;
    std::vector<char> empty;   // event had no hits at that N
    std::string event_description;
};

struct KWordBall {
    empirical::KWordMeasure center;
    double radius = 0.1;
};

struct ProfileBall {
    Vec bin_masses;  // target spatial masses per bin
    double radius = 0.1;
};

struct LdCurveOptions {
    long long mc_samples = 200000;
    std::uint64_t seed = 0;
    size_t exact_limit = kEnumLimit;
};

namespace detail {

inline void push_point(LDEstimate& est, int n, double p, double lo, double hi, bool exact) {
    est.ns.push_back(n);
    est.probability.push_back(p);
    est.wilson_lo.push_back(lo);
    est.wilson_hi.push_back(hi);
    est.exact.push_back(exact ? 1 : 0);
    est.empty.push_back(p <= 0.0 ? 1 : 0);
    est.rate.push_back(p > 0.0 ? -std::log(p) / n : kInf);
}

inline bool kword_hit(const rational::Word& w, const KWordBall& ball) {
    auto nu = empirical::empirical_k(w, ball.center.k);
    return l1_diff(nu.weights, ball.center.weights) < ball.radius;
}

}  // namespace detail

/// Decay-rate curve for an order-k ball event under a finite model: exact
/// enumeration when the word count permits, otherwise seeded draws from the
/// enlarged bridge with Wilson intervals.
inline LDEstimate ld_curve(const rational::RationalModel& model, const KWordBall& ball,
                           const std::vector<int>& ns, const LdCurveOptions& opts = {}) {
    model.validate();
    LDEstimate est;
    est.event_description = "l1 ball radius " + std::to_string(ball.radius) + " around order-" +
                            std::to_string(ball.center.k) + " measure";
    for (int n : ns) {
        size_t total = detail::pow_size(model.alphabet_size, n);
        if (total <= opts.exact_limit) {
            Vec mu = enumerate_exact(model, n);
            double p = 0.0;
            std::vector<int> symbols(n, 0);
            for (size_t idx = 0; idx < total; ++idx) {
                size_t rem = idx;
                for (int i = n - 1; i >= 0; --i) {
                    symbols[i] = static_cast<int>(rem % model.alphabet_size);
                    rem /= model.alphabet_size;
                }
                rational::Word w(model.alphabet_size, symbols);
                if (detail::kword_hit(w, ball)) p += mu[idx];
            }
            detail::push_point(est, n, p, p, p, true);
        } else {
            rational::EnlargedChain chain = rational::build_enlarged(model);
            rational::BridgeLaw law = rational::enlarged_bridge(chain, n);
            std::mt19937_64 rng(opts.seed ^ (0x9e3779b97f4a7c15ull * n));
            long long hits = 0;
            std::vector<int> symbols(n, 0);
            for (long long s = 0; s < opts.mc_samples; ++s) {
                auto xi = rational::sample_bridge(law, rng);
                for (int i = 0; i < n; ++i) symbols[i] = xi[i] / chain.matrix_dim;
                rational::Word w(model.alphabet_size, symbols);
                if (detail::kword_hit(w, ball)) ++hits;
            }
            double p = static_cast<double>(hits) / opts.mc_samples;
            auto wi = wilson95(hits, opts.mc_samples);
            detail::push_point(est, n, p, wi.lo, wi.hi, false);
        }
    }
    return est;
}

/// Decay-rate curve for a binned spatial ball around a density profile under
/// the exclusion measure.
inline LDEstimate ld_curve(const tasep::TasepParams& params, const ProfileBall& ball,
                           const std::vector<int>& ns, const LdCurveOptions& opts = {}) {
    LDEstimate est;
    const int bins = static_cast<int>(ball.bin_masses.size());
    est.event_description =
        "binned l1 ball radius " + std::to_string(ball.radius) + " at " + std::to_string(bins) +
        " bins";
    for (int n : ns) {
        tasep::TasepParams p = params;
        p.n = n;
        auto hit = [&](const std::vector<int>& word) {
            rational::Word w(2, word);
            auto sp = empirical::spatial_empirical(w, bins);
            return l1_diff(sp.masses, ball.bin_masses) < ball.radius;
        };
        if ((size_t{1} << n) <= opts.exact_limit && n <= 20) {
            tasep::TruncatedTasepModel model = tasep::build_tasep(p);
            Vec mu = enumerate_exact(model);
            double prob = 0.0;
            std::vector<int> word(n, 0);
            for (size_t idx = 0; idx < mu.size(); ++idx) {
                for (int i = 0; i < n; ++i) word[i] = static_cast<int>((idx >> (n - 1 - i)) & 1u);
                if (hit(word)) prob += mu[idx];
            }
            detail::push_point(est, n, prob, prob, prob, true);
        } else {
            tasep::TruncatedTasepModel model = tasep::build_tasep(p);
            tasep::TasepBridge br = tasep::make_tasep_bridge(model, n);
            std::mt19937_64 rng(opts.seed ^ (0xda942042e4dd58b5ull * n));
            long long hits = 0;
            std::vector<int> word(n, 0);
            for (long long s = 0; s < opts.mc_samples; ++s) {
                auto sample = tasep::sample_tasep_bridge(br, rng);
                for (int i = 0; i < n; ++i) word[i] = sample.eta[i];
                if (hit(word)) ++hits;
            }
            double prob = static_cast<double>(hits) / opts.mc_samples;
            auto wi = wilson95(hits, opts.mc_samples);
            detail::push_point(est, n, prob, wi.lo, wi.hi, false);
        }
    }
    return est;
}

// ------------------------------------------------------------- sandwich

struct SandwichReport {
    double rate_log_k = 0.0;  // |log k_N| / N
    double rate_log_K = 0.0;
    double slack_low = kInf;   // min over support of A/(k B)  (>= 1 when ok)
    double slack_high = kInf;  // min over support of (K B)/A
};

/// Verify k_N * lawB <= lawA <= K_N * lawB pointwise.
inline SandwichReport sandwich_check(const Vec& law_a, const Vec& law_b, double k_n, double big_k_n,
                                     int n) {
    if (law_a.size() != law_b.size())
        throw ValidationError("sandwich_check: laws must share a state space");
    if (!(k_n > 0.0) || !(big_k_n > 0.0) || n < 1)
        throw ValidationError("sandwich_check: constants and N must be positive");
    SandwichReport rep;
    rep.rate_log_k = std::fabs(std::log(k_n)) / n;
    rep.rate_log_K = std::fabs(std::log(big_k_n)) / n;
    for (size_t i = 0; i < law_a.size(); ++i) {
        double a = law_a[i], b = law_b[i];
        double slack = 1e-12 * (a + b + 1e-30);
        if (k_n * b > a + slack || a > big_k_n * b + slack)
            throw BoundViolationError("sandwich_check: bound violated at state " +
                                      std::to_string(i));
        if (b > 0.0 && a > 0.0) {
            rep.slack_low = std::min(rep.slack_low, a / (k_n * b));
            rep.slack_high = std::min(rep.slack_high, big_k_n * b / a);
        }
    }
    return rep;
}

}  // namespace ldmp::verify
