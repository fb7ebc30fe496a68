#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldmp/rate_tasep.hpp"

using namespace ldmp;
using namespace ldmp::rate_tasep;
using tasep::StepLaw;
using tasep::TasepParams;

namespace {

StepLaw law_of(double a00, double a0m, double a10, double a11) {
    StepLaw s;
    s.at(0, 0) = a00;
    s.at(0, -1) = a0m;
    s.at(1, 0) = a10;
    s.at(1, 1) = a11;
    return s;
}

/// Interior law with prescribed drift d in [-0.7, 0.7], strictly inside the
/// admissible support.
StepLaw interior_with_drift(double d, double spread = 0.15) {
    double up = std::max(d, 0.0) + spread * (1.0 - std::fabs(d));
    double down = std::max(-d, 0.0) + spread * (1.0 - std::fabs(d));
    double rest = 1.0 - up - down;
    return law_of(rest / 2.0, down, rest / 2.0, up);
}

/// Optimal descent law: exponential tilt with slope parameter t.
StepLaw tilted_interior(double t) {
    double z = 2.0 + 2.0 * std::cosh(t);
    return law_of(1.0 / z, std::exp(t) / z, 1.0 / z, std::exp(-t) / z);
}

MacroTriple typical_triple(const TasepParams& p, int cells) {
    // the minimizing triple: constant where flat, the optimal slope when a
    // boundary weight rewards height
    MacroTriple t;
    t.m.assign(cells, 0.0);
    t.nu_b.assign(cells, tasep::mu_boundary());
    t.z.assign(cells + 1, 0.0);
    double av = p.a(), bv = p.b();
    if (av > 1.0) {
        double s = (av - 1.0) / (av + 1.0);
        for (int j = 0; j <= cells; ++j) t.z[j] = s * (1.0 - static_cast<double>(j) / cells);
        t.nu_i.assign(cells, tilted_interior(std::log(av)));
    } else if (bv > 1.0) {
        double s = (bv - 1.0) / (bv + 1.0);
        for (int j = 0; j <= cells; ++j) t.z[j] = s * static_cast<double>(j) / cells;
        t.nu_i.assign(cells, tilted_interior(-std::log(bv)));
    } else {
        t.nu_i.assign(cells, tasep::mu_interior());
    }
    return t;
}

}  // namespace

TEST_CASE("step entropies") {
    CHECK(step_entropy(tasep::mu_interior(), tasep::mu_interior()) == doctest::Approx(0.0));
    CHECK(step_entropy(law_of(0, 0, 0, 1), tasep::mu_interior()) ==
          doctest::Approx(std::log(4.0)));
    StepLaw bad;
    bad.at(0, 1) = 1.0;
    CHECK(step_entropy(bad, tasep::mu_interior()) == kInf);
}

TEST_CASE("walk functional on basic triples") {
    const int L = 5;
    MacroTriple flat;
    flat.z.assign(L + 1, 0.3);
    flat.m.assign(L, 0.0);
    flat.nu_b.assign(L, tasep::mu_boundary());
    flat.nu_i.assign(L, tasep::mu_interior());
    auto r = rate_star(flat);
    CHECK(r.finite());
    CHECK(r.value == doctest::Approx(0.0));

    // ascending staircase pinned on up-steps
    MacroTriple stairs;
    stairs.z.assign(L + 1, 0.0);
    for (int j = 0; j <= L; ++j) stairs.z[j] = static_cast<double>(j) / L;
    stairs.m.assign(L, 0.0);
    stairs.nu_b.assign(L, tasep::mu_boundary());
    stairs.nu_i.assign(L, law_of(0, 0, 0, 1));
    auto r2 = rate_star(stairs);
    CHECK(r2.finite());
    CHECK(r2.value == doctest::Approx(std::log(4.0)));

    // boundary fraction where the path is positive is rejected
    MacroTriple broken = flat;
    broken.m[2] = 0.5;
    auto r3 = rate_star(broken);
    CHECK_FALSE(r3.finite());

    // slope mismatch is rejected
    MacroTriple mismatch = flat;
    mismatch.z[3] += 0.2;
    CHECK_FALSE(rate_star(mismatch).finite());
}

TEST_CASE("bridge constant") {
    CHECK(bridge_constant({0.75, 0.75, 4}) == doctest::Approx(0.0));
    CHECK(bridge_constant({0.4, 0.9, 4}) == doctest::Approx(std::log(25.0 / 24.0)));
    CHECK(bridge_constant({0.9, 0.4, 4}) == doctest::Approx(std::log(25.0 / 24.0)));
    // the combined constant matches the phase formula
    TasepParams cases[] = {{0.75, 0.75, 4}, {0.4, 0.9, 4}, {0.9, 0.4, 4}, {0.55, 0.62, 4}};
    for (const auto& p : cases) {
        double total = tasep::ld_constants(p).C;
        CHECK(bridge_constant(p) <= total + 1e-12);
    }
}

TEST_CASE("endpoint-weighted functional vanishes at the typical triple") {
    TasepParams cases[] = {{0.75, 0.75, 4}, {0.4, 0.9, 4}, {0.9, 0.4, 4}};
    for (const auto& p : cases) {
        auto t = typical_triple(p, 10);
        auto rs = rate_S_bridge(t, p);
        CHECK(rs.finite());
        CHECK(std::fabs(rs.value) < 1e-9);
        auto rf = rate_frakS(t, p);
        CHECK(rf.finite());
        CHECK(std::fabs(rf.value) < 1e-9);
    }
}

TEST_CASE("affine dependence on the path height") {
    TasepParams p{0.6, 0.8, 4};
    const int L = 4;
    const double slope = 0.2, delta = 0.07;
    auto make = [&](double z0) {
        MacroTriple t;
        t.z.assign(L + 1, 0.0);
        for (int j = 0; j <= L; ++j) t.z[j] = z0 + slope * j / L;
        t.m.assign(L, 0.0);
        t.nu_b.assign(L, tasep::mu_boundary());
        t.nu_i.assign(L, interior_with_drift(slope));
        return t;
    };
    auto r1 = rate_S_bridge(make(0.3), p);
    auto r2 = rate_S_bridge(make(0.3 + delta), p);
    double expect = delta * (std::log(p.alpha / (1 - p.alpha)) + std::log(p.beta / (1 - p.beta)));
    CHECK(r2.value - r1.value == doctest::Approx(expect).epsilon(1e-10));

    // boundary parameter at 1 with positive height diverges
    TasepParams edge{1.0, 0.9, 4};
    auto r3 = rate_S_bridge(make(0.3), edge);
    CHECK(std::isinf(r3.value));
}

TEST_CASE("boundary-visit reweighting term") {
    TasepParams p{0.75, 0.75, 4};
    const int L = 3;
    // with no boundary mass the two functionals differ by a vanishing shift
    auto t = typical_triple(p, L);
    auto rs = rate_S_bridge(t, p);
    auto rf = rate_frakS(t, p);
    double c_rest = tasep::ld_constants(p).C - bridge_constant(p);
    CHECK(rf.value - rs.value == doctest::Approx(c_rest).epsilon(1e-12));

    // all-boundary triple picks up exactly log 2
    MacroTriple park;
    park.z.assign(L + 1, 0.0);
    park.m.assign(L, 1.0);
    park.nu_b.assign(L, law_of(1, 0, 0, 0));  // sit still at the wall
    park.nu_i.assign(L, tasep::mu_interior());
    auto rs2 = rate_S_bridge(park, p);
    auto rf2 = rate_frakS(park, p);
    CHECK(rf2.value - rs2.value == doctest::Approx(std::log(2.0) + c_rest).epsilon(1e-12));
}

TEST_CASE("normalization rates of the two endpoint-weighted walks") {
    // transfer-operator estimates of the normalization growth approach the
    // closed-form constant from above as N grows
    auto rate_of = [](const TasepParams& p, int n, bool frak) {
        const int bmax = 700;
        const double av = p.a(), bv = p.b();
        Vec u(2 * (bmax + 1), 0.0);
        auto id = [&](int a, int b) { return a * (bmax + 1) + b; };
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b <= bmax; ++b) {
                double h = 2.0 * (a + b) + 1.0;
                u[id(a, b)] = frak ? 4.0 * std::pow(bv, b) / h : 4.0 * std::pow(bv, b);
            }
        double logscale = 0.0;
        for (int step = 0; step < n; ++step) {
            Vec nxt(u.size(), 0.0);
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b <= bmax; ++b) {
                    double s = 0.0;
                    for (int ap = 0; ap < 2; ++ap)
                        for (int bp = std::max(0, b - 1); bp <= std::min(bmax, b + 1); ++bp) {
                            double w = frak ? tasep::frak_S_entry(a, b, ap, bp)
                                            : tasep::effective_S_entry(a, b, ap, bp);
                            if (w > 0.0) s += w * u[id(ap, bp)];
                        }
                    nxt[id(a, b)] = s;
                }
            double mx = max_abs(nxt);
            logscale += std::log(mx);
            for (double& v : nxt) v /= mx;
            u = std::move(nxt);
        }
        double total = 0.0;
        double fmax = -kInf;
        Vec logf(u.size(), -kInf);
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b <= bmax; ++b) {
                double h = 2.0 * (a + b) + 1.0;
                double lf = b * std::log(av > 0 ? av : 1e-300) - std::log(4.0) +
                            (frak ? std::log(h) : 0.0);
                if (u[id(a, b)] > 0.0) {
                    logf[id(a, b)] = lf + std::log(u[id(a, b)]);
                    fmax = std::max(fmax, logf[id(a, b)]);
                }
            }
        for (double lv : logf)
            if (lv > -kInf) total += std::exp(lv - fmax);
        return (fmax + std::log(total) + logscale) / n;
    };

    TasepParams p{0.4, 0.9, 4};
    double c = bridge_constant(p);
    double r200 = rate_of(p, 200, false);
    double r800 = rate_of(p, 800, false);
    CHECK(std::fabs(r800 - c) < 0.05);
    CHECK(std::fabs(r800 - c) < std::fabs(r200 - c) + 1e-12);

    // the ratio of the two normalizations decays to the residual constant 0
    double f200 = rate_of(p, 200, true);
    double f800 = rate_of(p, 800, true);
    CHECK(std::fabs(f800 - r800) < 0.05);
    CHECK(std::fabs(f800 - r800) <= std::fabs(f200 - r200) + 1e-12);

    TasepParams mc{0.75, 0.75, 4};
    CHECK(std::fabs(rate_of(mc, 800, false)) < 0.03);
}

TEST_CASE("contracted pair functional") {
    TasepParams p{0.75, 0.75, 4};
    const int L = 4;
    std::vector<StepLaw> pi(L, tasep::mu_interior());
    Vec z(L + 1, 0.0);
    auto r = rate_pair_contracted(z, pi, p);
    CHECK(r.finite());
    CHECK(std::fabs(r.value) < 1e-12);

    // charging an impossible step is rejected
    std::vector<StepLaw> bad = pi;
    bad[1] = law_of(0.5, 0.2, 0.2, 0.0);
    bad[1].at(0, 1) = 0.1;
    CHECK_FALSE(rate_pair_contracted(z, bad, p).finite());

    // brute-force split search never beats the interior-only value
    std::mt19937_64 rng(40);
    for (int trial = 0; trial < 4; ++trial) {
        double d = 0.4 * (next_double(rng) - 0.5);
        StepLaw big = interior_with_drift(d, 0.1 + 0.1 * next_double(rng));
        Vec z2(2, 0.0);
        z2[1] = d / 1.0;
        if (z2[1] < 0.0) {
            z2[0] = -z2[1];
            z2[1] = 0.0;
        }
        std::vector<StepLaw> single{big};
        auto base = rate_pair_contracted(z2, single, p);
        CHECK(base.finite());
        double direct = kInf;
        const StepLaw mb = tasep::mu_boundary(), miw = tasep::mu_interior();
        for (double m = 0.0; m <= 0.5001; m += 0.05) {
            // nu_b on its three support atoms, nu_i recovers the mixture
            for (double b00 = 0.0; b00 <= 1.0001; b00 += 0.1)
                for (double b10 = 0.0; b00 + b10 <= 1.0001; b10 += 0.1) {
                    double b11 = 1.0 - b00 - b10;
                    StepLaw nb = law_of(b00, 0.0, b10, b11);
                    bool ok = true;
                    StepLaw ni;
                    for (int a = 0; a < 2 && ok; ++a)
                        for (int s = -1; s <= 1 && ok; ++s) {
                            double v = big.at(a, s) - m * nb.at(a, s);
                            if (v < -1e-12) ok = false;
                            ni.at(a, s) = std::max(v, 0.0) / (1.0 - m);
                        }
                    if (!ok) continue;
                    double hb = m > 0 ? step_entropy(nb, mb) : 0.0;
                    double hi = step_entropy(ni, miw);
                    if (hb == kInf || hi == kInf) continue;
                    double val = m * hb + (1.0 - m) * hi + std::log(2.0) * m * nb.at(0, 0);
                    direct = std::min(direct, val);
                }
        }
        double interior_only = step_entropy(big, miw);
        CHECK(direct >= interior_only - 1e-9);
        CHECK(direct == doctest::Approx(interior_only).epsilon(1e-6));
    }
}

TEST_CASE("height-density functional") {
    TasepParams p{0.75, 0.75, 4};
    const int L = 8;
    Profile half{Vec(L, 0.5)};
    Vec z(L + 1, 0.0);
    auto r = rate_z_rho(z, half, p);
    CHECK(r.finite());
    CHECK(std::fabs(r.value) < 1e-12);  // -2 log 2 + log 4

    // slope equal to the density empties the second entropy term
    std::mt19937_64 rng(8);
    Profile rnd{Vec(L, 0.0)};
    for (double& v : rnd.rho) v = 0.2 + 0.6 * next_double(rng);
    Vec zf(L + 1, 0.0);
    for (int j = 1; j <= L; ++j) zf[j] = zf[j - 1] + rnd.rho[j - 1] / L;
    auto r2 = rate_z_rho(zf, rnd, p);
    double expect = zf[L] * std::log(p.beta / (1 - p.beta)) +
                    tasep::ld_constants(p).C_prime;
    for (int j = 0; j < L; ++j) expect += hbin(rnd.rho[j]) / L;
    CHECK(r2.value == doctest::Approx(expect).epsilon(1e-12));

    // outside the admissible slope region
    Vec zbad(L + 1, 0.0);
    for (int j = 1; j <= L; ++j) zbad[j] = zbad[j - 1] - 0.7 / L;  // rho - zdot = 1.2
    Profile lowrho{Vec(L, 0.5)};
    CHECK_FALSE(rate_z_rho(zbad, lowrho, p).finite());
}

TEST_CASE("profile functional vanishes at the typical density") {
    TasepParams cases[] = {{0.75, 0.75, 4}, {0.4, 0.9, 4}, {0.9, 0.4, 4}};
    for (const auto& p : cases) {
        Profile prof{Vec(1000, tasep::rho_bar(p).value)};
        auto rep = rate_profile(prof, p);
        CHECK(std::fabs(rep.value) < 1e-3);
        CHECK(rep.gap < 1e-9);
    }
}

TEST_CASE("profile optimizer matches a nested exhaustive grid search") {
    TasepParams p{0.75, 0.75, 4};
    std::mt19937_64 rng(321);
    for (int trial = 0; trial < 10; ++trial) {
        Profile prof{Vec(3, 0.0)};
        for (double& v : prof.rho) v = 0.1 + 0.8 * next_double(rng);
        auto rep = rate_profile(prof, p);

        const double c1 = -std::log(p.a() * p.b());
        const double cb = std::log(p.b());
        double cp = tasep::ld_constants(p).C_prime;
        Vec f(4, 0.0);
        for (int j = 1; j <= 3; ++j) f[j] = f[j - 1] + prof.rho[j - 1] / 3.0;
        auto objective = [&](double g0, double g1, double g2) {
            Vec gd{g0, g1, g2};
            double gcum = 0.0, maxgf = 0.0, h = 0.0;
            for (int j = 1; j <= 3; ++j) {
                gcum += gd[j - 1] / 3.0;
                h += hbin(gd[j - 1]) / 3.0;
                maxgf = std::max(maxgf, gcum - f[j]);
            }
            double val = h + c1 * maxgf + cb * gcum - cb * f[3] + cp;
            for (int j = 0; j < 3; ++j) val += hbin(prof.rho[j]) / 3.0;
            return val;
        };
        // global coarse pass, then local refinement around its minimizer
        // (sound for a convex objective; the coarse grid alone resolves the
        // minimum only to a few 1e-3)
        double coarse = kInf;
        Vec arg{0.0, 0.0, 0.0};
        for (int i0 = 0; i0 <= 20; ++i0)
            for (int i1 = 0; i1 <= 20; ++i1)
                for (int i2 = 0; i2 <= 20; ++i2) {
                    double v = objective(i0 * 0.05, i1 * 0.05, i2 * 0.05);
                    if (v < coarse) {
                        coarse = v;
                        arg = {i0 * 0.05, i1 * 0.05, i2 * 0.05};
                    }
                }
        double best = coarse;
        double span = 0.1, step = 0.01;
        for (int pass = 0; pass < 2; ++pass) {
            Vec next_arg = arg;
            int cells = static_cast<int>(std::lround(2 * span / step));
            for (int i0 = 0; i0 <= cells; ++i0)
                for (int i1 = 0; i1 <= cells; ++i1)
                    for (int i2 = 0; i2 <= cells; ++i2) {
                        double g0 = std::clamp(arg[0] - span + i0 * step, 0.0, 1.0);
                        double g1 = std::clamp(arg[1] - span + i1 * step, 0.0, 1.0);
                        double g2 = std::clamp(arg[2] - span + i2 * step, 0.0, 1.0);
                        double v = objective(g0, g1, g2);
                        if (v < best) {
                            best = v;
                            next_arg = {g0, g1, g2};
                        }
                    }
            arg = next_arg;
            span = 2 * step;
            step = span / 25.0;
        }
        CHECK(std::fabs(rep.value - best) < 1e-3);
        CHECK(rep.value <= coarse + 1e-12);
    }
}

TEST_CASE("profile objective is midpoint convex in the slopes") {
    TasepParams p{0.4, 0.9, 4};
    const int L = 6;
    const double c1 = -std::log(p.a() * p.b());
    const double cb = std::log(p.b());
    std::mt19937_64 rng(17);
    Profile prof{Vec(L, 0.0)};
    for (double& v : prof.rho) v = 0.1 + 0.8 * next_double(rng);
    Vec f(L + 1, 0.0);
    for (int j = 1; j <= L; ++j) f[j] = f[j - 1] + prof.rho[j - 1] / L;
    auto objective = [&](const Vec& gd) {
        double gcum = 0.0, maxgf = 0.0, h = 0.0;
        for (int j = 1; j <= L; ++j) {
            gcum += gd[j - 1] / L;
            h += hbin(gd[j - 1]) / L;
            maxgf = std::max(maxgf, gcum - f[j]);
        }
        return h + c1 * maxgf + cb * gcum;
    };
    for (int trial = 0; trial < 200; ++trial) {
        Vec g1(L), g2(L), mid(L);
        for (int l = 0; l < L; ++l) {
            g1[l] = next_double(rng);
            g2[l] = next_double(rng);
            mid[l] = 0.5 * (g1[l] + g2[l]);
        }
        CHECK(objective(mid) <= 0.5 * (objective(g1) + objective(g2)) + 1e-10);
    }
}

TEST_CASE("contraction chain on random admissible inputs") {
    std::mt19937_64 rng(4242);
    TasepParams p{0.4, 0.9, 4};
    const int L = 8;
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        // admissible triple built backwards from slopes
        Profile rho{Vec(L, 0.0)};
        for (double& v : rho.rho) v = 0.1 + 0.8 * next_double(rng);
        Vec gdot(L);
        for (double& v : gdot) v = 0.05 + 0.9 * next_double(rng);
        Vec f(L + 1, 0.0), g(L + 1, 0.0);
        for (int j = 1; j <= L; ++j) {
            f[j] = f[j - 1] + rho.rho[j - 1] / L;
            g[j] = g[j - 1] + gdot[j - 1] / L;
        }
        double z0 = 0.0;
        for (int j = 0; j <= L; ++j) z0 = std::max(z0, g[j] - f[j]);
        z0 += 0.05 * next_double(rng);
        Vec z(L + 1, 0.0);
        for (int j = 0; j <= L; ++j) z[j] = f[j] + z0 - g[j];

        MacroTriple t;
        t.z = z;
        t.m.assign(L, 0.0);
        t.nu_b.assign(L, tasep::mu_boundary());
        t.nu_i.resize(L);
        bool usable = true;
        for (int j = 0; j < L; ++j) {
            double drift = L * (z[j + 1] - z[j]);
            if (std::fabs(drift) > 0.7) {
                usable = false;
                break;
            }
            t.nu_i[j] = interior_with_drift(drift);
        }
        if (!usable) continue;
        ++checked;

        auto full = rate_frakS(t, p);
        REQUIRE(full.finite());

        std::vector<StepLaw> pi(L);
        for (int j = 0; j < L; ++j) {
            for (int a = 0; a < 2; ++a)
                for (int s = -1; s <= 1; ++s)
                    pi[j].at(a, s) =
                        t.m[j] * t.nu_b[j].at(a, s) + (1.0 - t.m[j]) * t.nu_i[j].at(a, s);
        }
        auto contracted = rate_pair_contracted(z, pi, p);
        REQUIRE(contracted.finite());
        CHECK(contracted.value <= full.value + 1e-8);

        Profile rho_pi{Vec(L, 0.0)};
        for (int j = 0; j < L; ++j) rho_pi.rho[j] = pi[j].at(1, 1) + pi[j].at(1, 0);
        auto zr = rate_z_rho(z, rho_pi, p);
        REQUIRE(zr.finite());
        CHECK(zr.value <= contracted.value + 1e-8);

        auto prof = rate_profile(rho_pi, p);
        CHECK(prof.value <= zr.value + 1e-8);
    }
    CHECK(checked >= 10);
}
