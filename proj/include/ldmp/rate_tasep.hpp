#pragma once

#include "ldmp/common.hpp"
#include "ldmp/tasep.hpp"

namespace ldmp::rate_tasep {

// Large-deviation functionals for the rescaled label path and step measures
// of the boundary-driven exclusion model, evaluated on uniform grids, down
// to the density-profile functional obtained by minimizing over monotone
// companion paths.

using tasep::StepLaw;
using tasep::TasepParams;

struct Profile {
    Vec rho;  // cell averages on L uniform cells

    int cells() const { return static_cast<int>(rho.size()); }
    void validate() const {
        if (rho.empty()) throw ValidationError("profile: needs at least one cell");
        for (double r : rho)
            if (r < -1e-12 || r > 1.0 + 1e-12)
                throw ValidationError("profile: density must lie in [0,1]");
    }
};

/// Discretized triple: z on the L+1 grid points, per-cell boundary fraction
/// m and step laws. Where m_j = 0 the boundary law of that cell is unused.
struct MacroTriple {
    Vec z;                    // length L+1
    Vec m;                    // length L
    std::vector<StepLaw> nu_b;
    std::vector<StepLaw> nu_i;

    int cells() const { return static_cast<int>(m.size()); }
};

struct GPath {
    Vec gdot;  // length L, values in [0,1]
};

struct RateValue {
    double value = 0.0;
    std::string violation;  // non-empty means the functional is +inf

    bool finite() const { return violation.empty() && std::isfinite(value); }
};

/// Relative entropy of two step laws, +inf on support violation.
inline double step_entropy(const StepLaw& nu, const StepLaw& mu) {
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int t = -1; t <= 1; ++t) {
            double term = rel_entropy_term(nu.at(a, t), mu.at(a, t));
            if (term == kInf) return kInf;
            s += term;
        }
    return s;
}

namespace detail {

constexpr double kMassTol = 1e-9;
constexpr double kZeroTol = 1e-9;

inline bool support_within(const StepLaw& nu, const StepLaw& mu) {
    for (int a = 0; a < 2; ++a)
        for (int s = -1; s <= 1; ++s)
            if (nu.at(a, s) > 1e-15 && mu.at(a, s) == 0.0) return false;
    return true;
}

inline std::string check_triple(const MacroTriple& t) {
    const int L = t.cells();
    if (L < 1) return "empty grid";
    if (static_cast<int>(t.z.size()) != L + 1) return "z must have L+1 grid values";
    if (static_cast<int>(t.nu_b.size()) != L || static_cast<int>(t.nu_i.size()) != L)
        return "one step law pair per cell required";
    const StepLaw mb = tasep::mu_boundary(), mi = tasep::mu_interior();
    for (int j = 0; j <= L; ++j)
        if (t.z[j] < -1e-12) return "z must be non-negative";
    for (int j = 0; j < L; ++j) {
        double m = t.m[j];
        if (m < -1e-12 || m > 1.0 + 1e-12) return "m must lie in [0,1]";
        if (m > kZeroTol && std::min(t.z[j], t.z[j + 1]) > kZeroTol)
            return "m must vanish where z is positive";
        if (std::fabs(t.nu_i[j].total() - 1.0) > kMassTol) return "interior law must be a probability";
        if (!support_within(t.nu_i[j], mi)) return "interior law leaves the base support";
        if (m > 1e-15) {
            if (std::fabs(t.nu_b[j].total() - 1.0) > kMassTol)
                return "boundary law must be a probability";
            if (!support_within(t.nu_b[j], mb)) return "boundary law leaves the base support";
        }
        double zdot = L * (t.z[j + 1] - t.z[j]);
        double drift = m * t.nu_b[j].at(1, 1) +
                       (1.0 - m) * (t.nu_i[j].at(1, 1) - t.nu_i[j].at(0, -1));
        if (std::fabs(zdot - drift) > kMassTol * L) return "z slope must match the step drift";
    }
    return {};
}

/// z(0) log(alpha/(1-alpha)) + z(1) log(beta/(1-beta)), with the 0 * inf
/// convention so boundary parameters stay usable when the path is pinned.
inline double boundary_terms(const Vec& z, const TasepParams& p) {
    double t = 0.0;
    if (z.front() > 1e-15) t += z.front() * std::log(p.alpha / (1.0 - p.alpha));
    if (z.back() > 1e-15) t += z.back() * std::log(p.beta / (1.0 - p.beta));
    return t;
}

}  // namespace detail

/// Entropy cost of the effective walk with a prescribed triple; infinite
/// outside the constraint set.
inline RateValue rate_star(const MacroTriple& t) {
    RateValue out;
    out.violation = detail::check_triple(t);
    if (!out.violation.empty()) {
        out.value = kInf;
        return out;
    }
    const int L = t.cells();
    const StepLaw mb = tasep::mu_boundary(), mi = tasep::mu_interior();
    double acc = 0.0;
    for (int j = 0; j < L; ++j) {
        double m = t.m[j];
        double hb = m > 1e-15 ? step_entropy(t.nu_b[j], mb) : 0.0;
        double hi = (1.0 - m) > 1e-15 ? step_entropy(t.nu_i[j], mi) : 0.0;
        if (hb == kInf || hi == kInf) {
            out.value = kInf;
            out.violation = "support violation in cell " + std::to_string(j);
            return out;
        }
        acc += m * hb + (1.0 - m) * hi;
    }
    out.value = acc / L;
    return out;
}

/// Additive constant of the endpoint-tilted walk functional: the exponential
/// growth rate of its normalization. Descending from height s costs
/// 2 artanh(s) s - 2 log cosh(artanh(s)); the Legendre value at log a is
/// log((a+1)^2 / (4a)), counted only when the tilt rewards height.
inline double bridge_constant(const TasepParams& params) {
    params.validate();
    auto gain = [](double r) {
        return r > 1.0 ? std::log((r + 1.0) * (r + 1.0) / (4.0 * r)) : 0.0;
    };
    return std::max({0.0, gain(params.a()), gain(params.b())});
}

inline RateValue rate_S_bridge(const MacroTriple& t, const TasepParams& params) {
    RateValue base = rate_star(t);
    if (!base.finite()) return base;
    base.value += detail::boundary_terms(t.z, params) + bridge_constant(params);
    return base;
}

inline RateValue rate_frakS(const MacroTriple& t, const TasepParams& params) {
    RateValue base = rate_S_bridge(t, params);
    if (!base.finite()) return base;
    const int L = t.cells();
    double boundary_zero = 0.0;
    for (int j = 0; j < L; ++j)
        if (t.m[j] > 1e-15) boundary_zero += t.m[j] * t.nu_b[j].at(0, 0);
    double c_rest = tasep::ld_constants(params).C - bridge_constant(params);
    base.value += std::log(2.0) * boundary_zero / L + c_rest;
    return base;
}

/// Functional for (z, Pi) after minimizing over boundary/interior splits;
/// the minimizing split puts everything in the interior part.
inline RateValue rate_pair_contracted(const Vec& z, const std::vector<StepLaw>& pi,
                                      const TasepParams& params) {
    RateValue out;
    const int L = static_cast<int>(pi.size());
    if (L < 1 || static_cast<int>(z.size()) != L + 1) {
        out.violation = "grid mismatch";
        out.value = kInf;
        return out;
    }
    const StepLaw mi = tasep::mu_interior();
    double acc = 0.0;
    for (int j = 0; j <= L; ++j)
        if (z[j] < -1e-12) {
            out.violation = "z must be non-negative";
            out.value = kInf;
            return out;
        }
    for (int j = 0; j < L; ++j) {
        if (std::fabs(pi[j].total() - 1.0) > detail::kMassTol) {
            out.violation = "cell law must be a probability";
            out.value = kInf;
            return out;
        }
        double h = step_entropy(pi[j], mi);
        if (h == kInf) {
            out.violation = "cell law leaves the admissible support";
            out.value = kInf;
            return out;
        }
        double zdot = L * (z[j + 1] - z[j]);
        if (std::fabs(zdot - (pi[j].at(1, 1) - pi[j].at(0, -1))) > detail::kMassTol * L) {
            out.violation = "z slope must match the step drift";
            out.value = kInf;
            return out;
        }
        acc += h;
    }
    out.value = detail::boundary_terms(z, params) + acc / L + tasep::ld_constants(params).C;
    return out;
}

/// Functional for (z, rho): per-cell region 0 <= rho <= 1, 0 <= rho - zdot <= 1.
inline RateValue rate_z_rho(const Vec& z, const Profile& rho, const TasepParams& params) {
    RateValue out;
    rho.validate();
    const int L = rho.cells();
    if (static_cast<int>(z.size()) != L + 1) {
        out.violation = "grid mismatch";
        out.value = kInf;
        return out;
    }
    for (int j = 0; j <= L; ++j)
        if (z[j] < -1e-12) {
            out.violation = "z must be non-negative";
            out.value = kInf;
            return out;
        }
    double acc = 0.0;
    for (int j = 0; j < L; ++j) {
        double zdot = L * (z[j + 1] - z[j]);
        double r = rho.rho[j];
        double q = r - zdot;
        if (r < -1e-12 || r > 1.0 + 1e-12 || q < -1e-9 || q > 1.0 + 1e-9) {
            out.violation = "cell outside the admissible slope region";
            out.value = kInf;
            return out;
        }
        acc += hbin(std::clamp(r, 0.0, 1.0)) + hbin(std::clamp(q, 0.0, 1.0));
    }
    out.value =
        detail::boundary_terms(z, params) + acc / L + tasep::ld_constants(params).C_prime;
    return out;
}

// ------------------------------------------------------------- profile rate

struct ProfileOptions {
    int max_iter = 4000;        // subgradient iterations
    double tol = 1e-11;         // stop when primal-dual gap falls below this
};

struct ProfileReport {
    double value = 0.0;       // best primal value found
    double dual_value = 0.0;  // certified lower bound
    double gap = 0.0;
    Vec gdot;                 // optimizer slope per cell
    Vec g_cum;                // cumulative optimizer, length L+1
    int argmin_index = 0;     // grid index attaining min_j (F_j - G_j)
    int iterations = 0;
};

namespace detail {

inline double stable_softmin(double t) {
    // -log(1 + e^{-t})
    return t > 0.0 ? -std::log1p(std::exp(-t)) : t - std::log1p(std::exp(t));
}

/// Exact maximizer of the separable concave dual over non-increasing
/// cumulative weights in [0,1]: pool adjacent violators on the cell
/// densities, then map block means through the stationarity condition.
inline Vec pav_weights(const Vec& rho, double c1, double cb) {
    const int L = static_cast<int>(rho.size());
    auto w_of = [&](double mean_rho) {
        if (mean_rho <= 0.0) return kInf;
        if (mean_rho >= 1.0) return -kInf;
        return (std::log((1.0 - mean_rho) / mean_rho) - cb) / c1;
    };
    std::vector<double> sum_rho;
    std::vector<int> count;
    std::vector<double> wval;
    for (int l = 0; l < L; ++l) {
        sum_rho.push_back(rho[l]);
        count.push_back(1);
        wval.push_back(w_of(rho[l]));
        // non-increasing in l: merge while the new block exceeds its left one
        while (sum_rho.size() > 1 && wval[wval.size() - 2] < wval.back()) {
            size_t i = sum_rho.size() - 2;
            sum_rho[i] += sum_rho.back();
            count[i] += count.back();
            sum_rho.pop_back();
            count.pop_back();
            wval.pop_back();
            wval[i] = w_of(sum_rho[i] / count[i]);
        }
    }
    Vec w(L);
    int pos = 0;
    for (size_t blk = 0; blk < sum_rho.size(); ++blk) {
        double v = std::clamp(wval[blk], 0.0, 1.0);
        for (int i = 0; i < count[blk]; ++i) w[pos++] = v;
    }
    return w;
}

}  // namespace detail

/// Profile functional: minimize over slopes gdot in [0,1]^L the discretized
/// objective with the coupling through min_j (F_j - G_j). Solved by projected
/// subgradient with Polyak steps; the step target and the certified bound
/// come from the exact dual solve over monotone cumulative weights.
inline ProfileReport rate_profile(const Profile& rho, const TasepParams& params,
                                  const ProfileOptions& opts = {}) {
    rho.validate();
    params.validate();
    if (params.alpha >= 1.0 || params.beta >= 1.0)
        throw RegionViolationError("rate_profile: boundary weights diverge at alpha or beta = 1");
    const int L = rho.cells();
    const double av = params.a(), bv = params.b();
    const double c1 = -std::log(av * bv);  // positive inside the region
    const double cb = std::log(bv);
    const double cprime = tasep::ld_constants(params).C_prime;

    Vec f_cum(L + 1, 0.0);
    for (int j = 1; j <= L; ++j) f_cum[j] = f_cum[j - 1] + rho.rho[j - 1] / L;
    double const_part = -cb * f_cum[L] + cprime;
    for (int j = 0; j < L; ++j) const_part += hbin(std::clamp(rho.rho[j], 0.0, 1.0)) / L;

    // Dual bound.
    Vec w = detail::pav_weights(rho.rho, c1, cb);
    double dual = const_part;
    for (int l = 0; l < L; ++l) {
        double t = c1 * w[l] + cb;
        dual += (detail::stable_softmin(t) - c1 * w[l] * rho.rho[l]) / L;
    }

    auto primal_value = [&](const Vec& gdot, int* argmin) {
        double gcum = 0.0;
        double max_gf = 0.0;  // includes j = 0 where G - F = 0
        int bi = 0;
        double hsum = 0.0;
        for (int j = 1; j <= L; ++j) {
            gcum += gdot[j - 1] / L;
            hsum += hbin(gdot[j - 1]);
            double d = gcum - f_cum[j];
            if (d > max_gf + 1e-18) {
                max_gf = d;
                bi = j;
            }
        }
        if (argmin) *argmin = bi;
        return const_part + hsum / L + c1 * max_gf + cb * gcum;
    };

    // Start from the closed-form primal candidate of the dual solution.
    Vec gdot(L);
    for (int l = 0; l < L; ++l) gdot[l] = logistic(-(c1 * w[l] + cb));

    const double eps = 1e-12;
    Vec best_gdot = gdot;
    int argmin_idx = 0;
    double best_val = primal_value(gdot, &argmin_idx);
    Vec avg = gdot;
    int it = 0;
    for (; it < opts.max_iter; ++it) {
        if (best_val - dual <= opts.tol * std::max(1.0, std::fabs(dual)) + 1e-13) break;
        int jstar = 0;
        double cur = primal_value(gdot, &jstar);
        if (cur < best_val) {
            best_val = cur;
            best_gdot = gdot;
            argmin_idx = jstar;
        }
        Vec grad(L);
        double norm2 = 0.0;
        for (int l = 0; l < L; ++l) {
            double g = std::clamp(gdot[l], eps, 1.0 - eps);
            grad[l] = (std::log(g / (1.0 - g)) + (l + 1 <= jstar ? c1 : 0.0) + cb) / L;
            norm2 += grad[l] * grad[l];
        }
        if (norm2 <= 0.0) break;
        double step = (cur - dual) / norm2;
        if (!(step > 0.0)) break;
        for (int l = 0; l < L; ++l)
            gdot[l] = std::clamp(gdot[l] - step * grad[l], eps, 1.0 - eps);
        for (int l = 0; l < L; ++l) avg[l] = (avg[l] * (it + 1) + gdot[l]) / (it + 2);
    }
    int ai = 0;
    double avg_val = primal_value(avg, &ai);
    if (avg_val < best_val) {
        best_val = avg_val;
        best_gdot = avg;
        argmin_idx = ai;
    }
    int fi = 0;
    double final_val = primal_value(gdot, &fi);
    if (final_val < best_val) {
        best_val = final_val;
        best_gdot = gdot;
        argmin_idx = fi;
    }

    ProfileReport rep;
    rep.value = best_val;
    rep.dual_value = dual;
    rep.gap = best_val - dual;
    rep.gdot = best_gdot;
    rep.g_cum.assign(L + 1, 0.0);
    for (int j = 1; j <= L; ++j) rep.g_cum[j] = rep.g_cum[j - 1] + rep.gdot[j - 1] / L;
    rep.argmin_index = argmin_idx;
    rep.iterations = it;
    return rep;
}

}  // namespace ldmp::rate_tasep
