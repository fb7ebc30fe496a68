#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ldmp/empirical.hpp"

using namespace ldmp;
using namespace ldmp::empirical;
using ldmp::rational::Word;

TEST_CASE("block frequencies with wrap") {
    Word w(2, {0, 1, 0, 1});
    auto nu = empirical_k(w, 2);
    CHECK(nu.weights[nu.encode({0, 1})] == doctest::Approx(0.5));
    CHECK(nu.weights[nu.encode({1, 0})] == doctest::Approx(0.5));
    CHECK(nu.weights[nu.encode({0, 0})] == doctest::Approx(0.0));

    Word ones(2, {1, 1, 1});
    auto nu1 = empirical_k(ones, 1);
    CHECK(nu1.weights[1] == doctest::Approx(1.0));

    Word w2(2, {0, 0, 1});
    auto nu2 = empirical_k(w2, 2);
    CHECK(nu2.weights[nu2.encode({0, 0})] == doctest::Approx(1.0 / 3.0));
    CHECK(nu2.weights[nu2.encode({0, 1})] == doctest::Approx(1.0 / 3.0));
    CHECK(nu2.weights[nu2.encode({1, 0})] == doctest::Approx(1.0 / 3.0));  // wrap contributes
}

TEST_CASE("every block measure is finite-stationary and compatible") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<int> symbols(40);
        for (int& c : symbols) c = static_cast<int>(rng() % 3);
        Word w(3, symbols);
        for (int k = 1; k <= 4; ++k) {
            auto nu = empirical_k(w, k);
            CHECK(std::fabs(sum(nu.weights) - 1.0) < 1e-12);
            CHECK(check_stationary(nu, 1e-12));
        }
        // summing the (k+1)-measure over its trailing symbol gives the k-measure
        for (int k = 1; k <= 3; ++k) {
            auto big = empirical_k(w, k + 1);
            auto small = empirical_k(w, k);
            auto marg = marginal_front(big);
            CHECK(linf_diff(marg.weights, small.weights) < 1e-13);
        }
    }
}

TEST_CASE("stationarity check distinguishes measures") {
    auto point = KWordMeasure::zero(2, 2);
    point.weights[point.encode({0, 1})] = 1.0;
    CHECK_FALSE(check_stationary(point, 1e-9));

    auto uniform = KWordMeasure::zero(2, 2);
    uniform.weights.assign(4, 0.25);
    CHECK(check_stationary(uniform, 1e-12));
}

TEST_CASE("spatial masses") {
    std::vector<int> ones(50, 1);
    Word w(2, ones);
    auto sp = spatial_empirical(w, 7);
    CHECK(sum(sp.masses) == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<int> zeros(50, 0);
    Word wz(2, zeros);
    auto spz = spatial_empirical(wz, 7);
    CHECK(sum(spz.masses) == doctest::Approx(0.0));

    std::vector<int> alt(1000);
    for (int i = 0; i < 1000; ++i) alt[i] = i % 2 == 0 ? 1 : 0;
    Word wa(2, alt);
    auto spa = spatial_empirical(wa, 10);
    for (double m : spa.masses) CHECK(std::fabs(m - 0.05) < 0.001);
}

TEST_CASE("bin refinement then coarsening is exact") {
    std::mt19937_64 rng(9);
    std::vector<int> symbols(37);
    for (int& c : symbols) c = static_cast<int>(rng() % 2);
    Word w(2, symbols);
    auto coarse = spatial_empirical(w, 5);
    auto fine = spatial_empirical(w, 10);
    for (int j = 0; j < 5; ++j)
        CHECK(coarse.masses[j] ==
              doctest::Approx(fine.masses[2 * j] + fine.masses[2 * j + 1]).epsilon(1e-14));
}

TEST_CASE("generalized spatial measure ties the two views together") {
    std::mt19937_64 rng(13);
    std::vector<int> symbols(200);
    for (int& c : symbols) c = static_cast<int>(rng() % 2);
    Word w(2, symbols);

    auto gs = generalized_spatial(w, 2, 4);
    CHECK(std::fabs(sum(gs.masses) - 1.0) < 1e-12);

    // full-interval marginal equals the block measure
    auto nu = empirical_k(w, 2);
    for (size_t word = 0; word < gs.words(); ++word) {
        double total = 0.0;
        for (int j = 0; j < 4; ++j) total += gs.at(j, word);
        CHECK(total == doctest::Approx(nu.weights[word]).epsilon(1e-12));
    }

    // symbol-weighted k=1 bins reproduce the spatial measure
    auto g1 = generalized_spatial(w, 1, 4);
    auto sp = spatial_empirical(w, 4);
    for (int j = 0; j < 4; ++j) {
        double weighted = 0.0;
        for (int a = 0; a < 2; ++a) weighted += a * g1.at(j, a);
        CHECK(weighted == doctest::Approx(sp.masses[j]).epsilon(1e-13));
    }

    // brute-force per-index tally
    auto fine = generalized_spatial(w, 2, 4);
    Vec tally(4 * 4, 0.0);
    const int n = w.size();
    for (int i = 1; i <= n; ++i) {
        int bin = static_cast<int>((static_cast<long long>(i) * 4 + n - 1) / n) - 1;
        int word = w.symbols[i - 1] * 2 + w.symbols[i % n];
        tally[bin * 4 + word] += 1.0 / n;
    }
    CHECK(linf_diff(tally, fine.masses) < 1e-14);
}

TEST_CASE("order bound is enforced") {
    Word w(2, {0, 1});
    CHECK_THROWS_AS(empirical_k(w, 9), ValidationError);
    CHECK_THROWS_AS(generalized_spatial(w, 0, 3), ValidationError);
}
