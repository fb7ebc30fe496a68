#pragma once

#include "ldmp/common.hpp"
#include "ldmp/empirical.hpp"
#include "ldmp/perron.hpp"
#include "ldmp/rational.hpp"

namespace ldmp::rate_finite {

// Pair rate functional for finite models, in two routes: a primal
// minimization over stationary couplings on the enlarged pair space with a
// fixed symbol-pair marginal, and its concave dual over positive tilt
// matrices acting on the symbol transitions. The tilted dominant eigenvalue
// connects the two.

using empirical::KWordMeasure;

struct TiltMatrix {
    int n = 0;
    Vec p;  // row-major n x n, strictly positive

    double& at(int a, int ap) { return p[static_cast<size_t>(a) * n + ap]; }
    double at(int a, int ap) const { return p[static_cast<size_t>(a) * n + ap]; }

    static TiltMatrix ones(int n) { return TiltMatrix{n, Vec(static_cast<size_t>(n) * n, 1.0)}; }
};

struct RateReport {
    double value = 0.0;
    bool infinite = false;
    double gap = std::numeric_limits<double>::quiet_NaN();  // primal - dual when known
    int iterations = 0;
    Vec minimizer;          // dual: tilt p (A x A); primal: coupling over (A*dim)^2
    int minimizer_dim = 0;  // row length of the minimizer grid
    std::string note;
};

struct PairRateOptions {
    double grad_tol = 1e-8;
    int max_iter = 100000;
    double marginal_tol = 1e-13;
    bool compute_gap = true;
};

namespace detail {

inline void validate_pair_measure(const KWordMeasure& nu2, int alphabet) {
    if (nu2.k != 2) throw ValidationError("pair measure must have order 2");
    if (nu2.alphabet_size != alphabet) throw ValidationError("pair measure alphabet mismatch");
    for (double w : nu2.weights)
        if (w < -1e-12) throw ValidationError("pair measure has negative mass");
    if (std::fabs(sum(nu2.weights) - 1.0) > 1e-9)
        throw ValidationError("pair measure must sum to 1");
    if (!empirical::check_stationary(nu2, 1e-9))
        throw ValidationError("pair measure must be finite-stationary");
}

inline Vec first_marginal(const KWordMeasure& nu2) {
    Vec nu1(nu2.alphabet_size, 0.0);
    for (size_t i = 0; i < nu2.table_size(); ++i) nu1[i / nu2.alphabet_size] += nu2.weights[i];
    return nu1;
}

/// Shared context: per-symbol matrices, log of the base dominant value,
/// and warm-started dominant pairs of tilted matrices.
struct Solver {
    const rational::RationalModel& model;
    int na;
    int dim;
    int ns;
    double log_lambda;
    Vec right, left;  // warm starts for the tilted dominant vectors

    explicit Solver(const rational::RationalModel& m) : model(m) {
        model.validate();
        na = model.alphabet_size;
        dim = model.matrix_dim();
        ns = na * dim;
        perron::PerronData pd = perron::perron_finite(model.symbol_sum(), 1e-13);
        log_lambda = std::log(pd.value);
        right.assign(ns, 1.0);
        left.assign(ns, 1.0);
    }

    Mat tilted(const TiltMatrix& p) const {
        Mat t(ns, ns);
        for (int a = 0; a < na; ++a)
            for (int b = 0; b < dim; ++b)
                for (int ap = 0; ap < na; ++ap)
                    for (int bp = 0; bp < dim; ++bp)
                        t(a * dim + b, ap * dim + bp) =
                            model.matrix_per_symbol[a](b, bp) * p.at(a, ap);
        return t;
    }

    /// Dominant value of t, refining the cached left/right vectors in place.
    double dominant(const Mat& t, double tol = 5e-14, int max_iter = 200000) {
        Mat tt = transpose(t);
        double k = 0.0;
        for (int it = 0; it < max_iter; ++it) {
            Vec r2 = mat_vec(t, right);
            Vec l2 = mat_vec(tt, left);
            double mr = max_abs(r2), ml = max_abs(l2);
            if (mr <= 0.0 || ml <= 0.0) throw NoConvergenceError("tilted dominant pair vanished");
            for (double& v : r2) v /= mr;
            for (double& v : l2) v /= ml;
            Vec tr = mat_vec(t, r2);
            k = dot(l2, tr) / dot(l2, r2);
            double resid = 0.0;
            for (int i = 0; i < ns; ++i) resid = std::max(resid, std::fabs(tr[i] - k * r2[i]));
            right = std::move(r2);
            left = std::move(l2);
            if (resid <= tol * std::max(1.0, std::fabs(k))) return k;
        }
        throw NoConvergenceError("tilted dominant pair did not converge");
    }
};

}  // namespace detail

struct TiltedPerron {
    double k = 0.0;
    Vec gamma;  // right dominant vector over (a,b)
    Vec left;   // left dominant vector over (a,b)
};

/// Dominant value/vector of the matrix with entries M^(a)_{b,b'} p(a,a').
inline TiltedPerron tilted_perron(const rational::RationalModel& model, const TiltMatrix& p) {
    if (p.n != model.alphabet_size) throw ValidationError("tilted_perron: tilt size mismatch");
    if (!all_positive(p.p)) throw ValidationError("tilted_perron: tilt must be strictly positive");
    detail::Solver ctx(model);
    Mat t = ctx.tilted(p);
    auto rep = perron::check_primitive(t);
    if (!rep.irreducible || !rep.aperiodic)
        throw NotPrimitiveError("tilted_perron: tilted matrix is not primitive");
    double k = ctx.dominant(t);
    return TiltedPerron{k, ctx.right, ctx.left};
}

/// Concave dual: maximize sum nu2 log p + log lambda - log k(p) over
/// row-stochastic positive tilts, by projected gradient ascent in the row
/// logits with a backtracking line search.
inline RateReport pair_rate_dual(const rational::RationalModel& model, const KWordMeasure& nu2,
                                 const PairRateOptions& opts = {}) {
    detail::Solver ctx(model);
    detail::validate_pair_measure(nu2, ctx.na);
    const int na = ctx.na;
    Vec nu1 = detail::first_marginal(nu2);

    // Logit parameterization of the rows; start at the Markov approximation.
    Vec theta(static_cast<size_t>(na) * na, 0.0);
    for (int a = 0; a < na; ++a)
        for (int ap = 0; ap < na; ++ap) {
            double q = nu1[a] > 0.0 ? nu2.weights[a * na + ap] / nu1[a] : 1.0 / na;
            theta[a * na + ap] = std::log(std::max(q, 1e-6));
        }

    TiltMatrix p{na, Vec(static_cast<size_t>(na) * na, 0.0)};
    auto unpack = [&](const Vec& th) {
        for (int a = 0; a < na; ++a) {
            double mx = -kInf;
            for (int ap = 0; ap < na; ++ap) mx = std::max(mx, th[a * na + ap]);
            double z = 0.0;
            for (int ap = 0; ap < na; ++ap) z += std::exp(th[a * na + ap] - mx);
            for (int ap = 0; ap < na; ++ap) p.at(a, ap) = std::exp(th[a * na + ap] - mx) / z;
        }
    };

    auto objective = [&]() {
        Mat t = ctx.tilted(p);
        double k = ctx.dominant(t);
        double val = ctx.log_lambda - std::log(k);
        for (int a = 0; a < na; ++a)
            for (int ap = 0; ap < na; ++ap) {
                double w = nu2.weights[a * na + ap];
                if (w > 0.0) val += w * std::log(p.at(a, ap));
            }
        return std::pair<double, double>{val, k};
    };

    unpack(theta);
    auto [best, kcur] = objective();
    double step = 0.25;
    int it = 0;
    double grad_norm = kInf;
    for (; it < opts.max_iter; ++it) {
        // dD/dp = nu2/p - (1/k) l^T dT r / <l, r>
        double lr = dot(ctx.left, ctx.right);
        Vec dp(static_cast<size_t>(na) * na, 0.0);
        for (int a = 0; a < na; ++a)
            for (int ap = 0; ap < na; ++ap) {
                double s = 0.0;
                for (int b = 0; b < ctx.dim; ++b) {
                    double lb = ctx.left[a * ctx.dim + b];
                    if (lb == 0.0) continue;
                    for (int bp = 0; bp < ctx.dim; ++bp)
                        s += lb * model.matrix_per_symbol[a](b, bp) * ctx.right[ap * ctx.dim + bp];
                }
                double w = nu2.weights[a * na + ap];
                dp[a * na + ap] = (w > 0.0 ? w / p.at(a, ap) : 0.0) - s / (kcur * lr);
            }
        // chain through the row softmax
        Vec grad(static_cast<size_t>(na) * na, 0.0);
        grad_norm = 0.0;
        for (int a = 0; a < na; ++a) {
            double inner = 0.0;
            for (int ap = 0; ap < na; ++ap) inner += dp[a * na + ap] * p.at(a, ap);
            for (int ap = 0; ap < na; ++ap) {
                grad[a * na + ap] = p.at(a, ap) * (dp[a * na + ap] - inner);
                grad_norm = std::max(grad_norm, std::fabs(grad[a * na + ap]));
            }
        }
        if (grad_norm <= opts.grad_tol) break;

        bool improved = false;
        Vec saved = theta;
        for (int ls = 0; ls < 60; ++ls) {
            for (size_t i = 0; i < theta.size(); ++i) theta[i] = saved[i] + step * grad[i];
            unpack(theta);
            auto [val, k2] = objective();
            if (val > best) {
                best = val;
                kcur = k2;
                step = std::min(step * 1.3, 64.0);
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if (!improved) {
            theta = saved;
            unpack(theta);
            break;  // no ascent direction at working precision
        }
    }

    RateReport rep;
    rep.value = best;
    rep.iterations = it;
    rep.minimizer = p.p;
    rep.minimizer_dim = na;
    if (grad_norm > opts.grad_tol) rep.note = "gradient above tol at stop";
    double pmin = *std::min_element(p.p.begin(), p.p.end());
    if (pmin < 1e-6) rep.note += (rep.note.empty() ? "" : "; ") + std::string("tilt near boundary");
    return rep;
}

/// Primal: minimize the pair relative entropy over stationary couplings on
/// the enlarged pair space with symbol-pair marginal nu2. The iterate is the
/// stationary coupling of a tilted kernel, so stationarity is exact at every
/// step; the tilt is driven by the marginal residual. The residual is the
/// gradient of the (concave) unrestricted log-tilt objective, so a
/// line-searched ascent lands on the marginal constraint.
inline RateReport pair_rate_primal(const rational::RationalModel& model, const KWordMeasure& nu2,
                                   const PairRateOptions& opts = {}) {
    detail::Solver ctx(model);
    detail::validate_pair_measure(nu2, ctx.na);
    const int na = ctx.na, dim = ctx.dim;
    Vec nu1 = detail::first_marginal(nu2);

    // Support feasibility: a charged symbol pair needs a usable label path.
    for (int a = 0; a < na; ++a)
        for (int ap = 0; ap < na; ++ap) {
            if (nu2.weights[a * na + ap] <= 0.0) continue;
            bool ok = false;
            for (int b = 0; b < dim && !ok; ++b)
                for (int bp = 0; bp < dim && !ok; ++bp)
                    if (model.matrix_per_symbol[a](b, bp) > 0.0) ok = true;
            if (!ok) {
                RateReport rep;
                rep.infinite = true;
                rep.value = kInf;
                rep.note = "charged symbol pair has empty support";
                return rep;
            }
        }

    // Masked state space: symbols carrying mass, transitions charged by nu2.
    std::vector<int> syms;
    for (int a = 0; a < na; ++a)
        if (nu1[a] > 0.0) syms.push_back(a);
    const int nsym = static_cast<int>(syms.size());
    const int ms = nsym * dim;
    auto sid = [&](int ia, int b) { return ia * dim + b; };
    auto active = [&](int a, int ap) { return nu2.weights[a * na + ap] > 0.0; };

    Vec theta(static_cast<size_t>(nsym) * nsym, 0.0);
    for (int ia = 0; ia < nsym; ++ia)
        for (int ja = 0; ja < nsym; ++ja) {
            double w = nu2.weights[syms[ia] * na + syms[ja]];
            theta[ia * nsym + ja] = std::log(std::max(w / nu1[syms[ia]], 1e-12));
        }

    Mat t(ms, ms), q(ms, ms);
    Vec pi(ms, 1.0 / ms);
    Vec right(ms, 1.0), left(ms, 1.0);
    Vec rho(static_cast<size_t>(nsym) * nsym, 0.0);

    // evaluates the unrestricted objective and fills q, pi, rho
    auto evaluate = [&](const Vec& th) {
        for (int ia = 0; ia < nsym; ++ia)
            for (int ja = 0; ja < nsym; ++ja) {
                double pv = active(syms[ia], syms[ja]) ? std::exp(th[ia * nsym + ja]) : 0.0;
                for (int b = 0; b < dim; ++b)
                    for (int bp = 0; bp < dim; ++bp)
                        t(sid(ia, b), sid(ja, bp)) =
                            pv * model.matrix_per_symbol[syms[ia]](b, bp);
            }
        // dominant pair on the masked matrix
        double k = 0.0;
        Mat tt = transpose(t);
        for (int itp = 0; itp < 100000; ++itp) {
            Vec r2 = mat_vec(t, right);
            Vec l2 = mat_vec(tt, left);
            double mr = max_abs(r2), ml = max_abs(l2);
            if (mr <= 0.0 || ml <= 0.0)
                throw NoConvergenceError("pair_rate_primal: masked chain lost its mass");
            for (double& v : r2) v /= mr;
            for (double& v : l2) v /= ml;
            Vec tr = mat_vec(t, r2);
            k = dot(l2, tr) / dot(l2, r2);
            double resid = 0.0;
            for (int i = 0; i < ms; ++i) resid = std::max(resid, std::fabs(tr[i] - k * r2[i]));
            right = std::move(r2);
            left = std::move(l2);
            if (resid <= 5e-14 * std::max(1.0, std::fabs(k))) break;
        }
        for (int r = 0; r < ms; ++r) {
            double rowsum = 0.0;
            for (int c = 0; c < ms; ++c) {
                double v = right[r] > 0.0 ? t(r, c) * right[c] / (k * right[r]) : 0.0;
                q(r, c) = v;
                rowsum += v;
            }
            if (rowsum > 0.0)
                for (int c = 0; c < ms; ++c) q(r, c) /= rowsum;
        }
        for (int sweep = 0; sweep < 200000; ++sweep) {
            Vec nxt = vec_mat(pi, q);
            double resid = linf_diff(nxt, pi);
            pi = std::move(nxt);
            normalize_sum(pi);
            if (resid <= 1e-15) break;
        }
        std::fill(rho.begin(), rho.end(), 0.0);
        for (int ia = 0; ia < nsym; ++ia)
            for (int b = 0; b < dim; ++b) {
                int r = sid(ia, b);
                if (pi[r] <= 0.0) continue;
                for (int ja = 0; ja < nsym; ++ja)
                    for (int bp = 0; bp < dim; ++bp)
                        rho[ia * nsym + ja] += pi[r] * q(r, sid(ja, bp));
            }
        return k;
    };

    auto residual = [&](Vec& grad) {
        double err = 0.0;
        for (int ia = 0; ia < nsym; ++ia)
            for (int ja = 0; ja < nsym; ++ja) {
                double w = nu2.weights[syms[ia] * na + syms[ja]];
                double g = active(syms[ia], syms[ja]) ? w - rho[ia * nsym + ja] : 0.0;
                grad[ia * nsym + ja] = g;
                err += std::fabs(g);
            }
        return err;
    };

    evaluate(theta);
    Vec grad(theta.size(), 0.0);
    double err = residual(grad);
    double step = 0.5;
    int it = 0;
    for (; it < opts.max_iter && err > opts.marginal_tol; ++it) {
        // the residual is the ascent direction of a concave objective; steps
        // are accepted on residual decrease, which is measurable to machine
        // precision (unlike the objective increments near the optimum)
        Vec saved = theta;
        bool improved = false;
        for (int ls = 0; ls < 80 && step > 1e-16; ++ls) {
            for (size_t i = 0; i < theta.size(); ++i) theta[i] = saved[i] + step * grad[i];
            evaluate(theta);
            Vec grad2(theta.size(), 0.0);
            double err2 = residual(grad2);
            if (err2 < err) {
                err = err2;
                grad = std::move(grad2);
                improved = true;
                step = std::min(step * 1.3, 64.0);
                break;
            }
            step *= 0.4;
        }
        if (!improved) {
            theta = saved;
            evaluate(theta);
            residual(grad);
            break;
        }
    }
    if (err > 1e-8)
        throw NoConvergenceError("pair_rate_primal: marginal fit did not converge");

    // Value of the fitted coupling, reported on the full state space.
    const int ns = ctx.ns;
    double value = ctx.log_lambda;
    Vec coupling(static_cast<size_t>(ns) * ns, 0.0);
    for (int ia = 0; ia < nsym; ++ia)
        for (int b = 0; b < dim; ++b) {
            int r = sid(ia, b);
            int rfull = syms[ia] * dim + b;
            for (int ja = 0; ja < nsym; ++ja)
                for (int bp = 0; bp < dim; ++bp) {
                    double w = pi[r] * q(r, sid(ja, bp));
                    int cfull = syms[ja] * dim + bp;
                    coupling[static_cast<size_t>(rfull) * ns + cfull] = w;
                    if (w > 0.0)
                        value +=
                            w * std::log(w / (pi[r] * model.matrix_per_symbol[syms[ia]](b, bp)));
                }
        }

    RateReport rep;
    rep.value = value;
    rep.iterations = it;
    rep.minimizer = std::move(coupling);
    rep.minimizer_dim = ns;
    if (opts.compute_gap) {
        PairRateOptions dual_opts = opts;
        dual_opts.compute_gap = false;
        rep.gap = rep.value - pair_rate_dual(model, nu2, dual_opts).value;
    }
    return rep;
}

/// Closed form for models whose matrices share the dominant eigenvector:
/// sum nu2(a,a') log( nu2(a,a') / (nu1(a) P(a')) ) with P(a) = m(a)/sum m.
inline double rate_parallel_case(const Vec& m, const KWordMeasure& nu2) {
    if (!all_positive(m)) throw ValidationError("rate_parallel_case: weights must be positive");
    detail::validate_pair_measure(nu2, static_cast<int>(m.size()));
    const int na = static_cast<int>(m.size());
    Vec nu1 = detail::first_marginal(nu2);
    const double total = sum(m);
    double val = 0.0;
    for (int a = 0; a < na; ++a)
        for (int ap = 0; ap < na; ++ap) {
            double w = nu2.weights[a * na + ap];
            if (w <= 0.0) continue;
            double denom = nu1[a] * (m[ap] / total);
            double term = rel_entropy_term(w, denom);
            if (term == kInf) return kInf;
            val += term;
        }
    return val;
}

/// All-stochastic-matrices case, any order k: conditional relative entropy
/// of nu^k given its (k-1)-prefix marginal against the uniform next symbol.
inline double rate_stochastic_case(const KWordMeasure& nuk, int alphabet_size) {
    if (nuk.alphabet_size != alphabet_size)
        throw ValidationError("rate_stochastic_case: alphabet mismatch");
    if (!empirical::check_stationary(nuk, 1e-9))
        throw ValidationError("rate_stochastic_case: measure must be finite-stationary");
    const int na = alphabet_size;
    if (nuk.k == 1) {
        double val = 0.0;
        for (double w : nuk.weights) val += rel_entropy_term(w, 1.0 / na);
        return val;
    }
    KWordMeasure prefix = empirical::marginal_front(nuk);
    double val = 0.0;
    for (size_t i = 0; i < nuk.table_size(); ++i) {
        double w = nuk.weights[i];
        if (w <= 0.0) continue;
        double denom = prefix.weights[i / na] / na;
        double term = rel_entropy_term(w, denom);
        if (term == kInf) return kInf;
        val += term;
    }
    return val;
}

struct SpatialRateReport {
    double value = 0.0;
    bool infinite = false;
    Vec per_bin;
    std::string note;
};

/// Riemann average of the per-bin pair rate, evaluated by the dual solver.
/// Any bin failing to be a stationary probability makes the value +inf.
inline SpatialRateReport spatial_rate(const rational::RationalModel& model,
                                      const std::vector<KWordMeasure>& bins,
                                      const PairRateOptions& opts = {}) {
    SpatialRateReport rep;
    if (bins.empty()) throw ValidationError("spatial_rate: needs at least one bin");
    rep.per_bin.assign(bins.size(), 0.0);
    for (size_t j = 0; j < bins.size(); ++j) {
        const KWordMeasure& nu = bins[j];
        if (nu.k != 2 || nu.alphabet_size != model.alphabet_size ||
            std::fabs(sum(nu.weights) - 1.0) > 1e-9 || !empirical::check_stationary(nu, 1e-9)) {
            rep.infinite = true;
            rep.value = kInf;
            rep.per_bin[j] = kInf;
            rep.note = "bin " + std::to_string(j) + " is not a stationary probability";
            return rep;
        }
        rep.per_bin[j] = pair_rate_dual(model, nu, opts).value;
    }
    rep.value = sum(rep.per_bin) / static_cast<double>(bins.size());
    return rep;
}

}  // namespace ldmp::rate_finite
