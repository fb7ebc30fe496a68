#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "ldmp/model_io.hpp"

using namespace ldmp;
using nlohmann::json;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& content) {
        path = std::string("ldmp_io_test_") + name;
        std::ofstream out(path);
        out << content;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("number formatting is stable") {
    CHECK(io::fmt(0.5) == "0.5");
    CHECK(io::fmt(1.0 / 3.0) == "0.333333333333");
    CHECK(io::fmt(1e-12) == "1e-12");
}

TEST_CASE("explicit model files") {
    json j = {
        {"type", "explicit"},
        {"alphabet_size", 2},
        {"matrices",
         {{{0.3, 0.7}, {0.6, 0.4}}, {{0.5, 0.5}, {0.2, 0.8}}}},
        {"x", {1.0, 1.0}},
        {"y", {1.0, 1.0}},
    };
    auto mf = io::parse_model_json(j);
    CHECK_FALSE(mf.is_tasep);
    CHECK(mf.model.alphabet_size == 2);
    CHECK(mf.model.matrix_per_symbol[0](0, 1) == doctest::Approx(0.7));

    json bad = j;
    bad["x"] = {1.0, -2.0};
    CHECK_THROWS_WITH_AS(io::parse_model_json(bad),
                         "model: boundary vectors must be strictly positive", ValidationError);

    json ragged = j;
    ragged["matrices"][0] = {{0.3, 0.7}, {0.6}};
    CHECK_THROWS_AS(io::parse_model_json(ragged), ValidationError);

    json negative = j;
    negative["matrices"][1][0][0] = -0.5;
    CHECK_THROWS_WITH_AS(io::parse_model_json(negative),
                         "model: matrix entries must be non-negative", ValidationError);

    json untyped = {{"alphabet_size", 2}};
    CHECK_THROWS_AS(io::parse_model_json(untyped), ValidationError);
}

TEST_CASE("exclusion model files") {
    json j = {{"type", "tasep"}, {"alpha", 0.75}, {"beta", 0.75}};
    auto mf = io::parse_model_json(j);
    CHECK(mf.is_tasep);
    CHECK(mf.alpha == doctest::Approx(0.75));

    json bad = {{"type", "tasep"}, {"alpha", 1.5}, {"beta", 0.5}};
    CHECK_THROWS_AS(io::parse_model_json(bad), ValidationError);
}

TEST_CASE("model file loading") {
    TempFile f("model.json",
               R"({"type":"tasep","alpha":0.9,"beta":0.4})");
    auto mf = io::load_model_file(f.path);
    CHECK(mf.is_tasep);
    CHECK(mf.beta == doctest::Approx(0.4));

    TempFile broken("broken.json", "{not json");
    CHECK_THROWS_AS(io::load_model_file(broken.path), ValidationError);
    CHECK_THROWS_AS(io::load_model_file("missing_file.json"), ValidationError);
}

TEST_CASE("profile CSV") {
    TempFile f("profile.csv", "x,rho\n0.5,0.2\n1.0,0.8\n");
    auto rows = io::read_profile_csv(f.path);
    CHECK(rows.size() == 2);
    Vec rho = io::resample_profile(rows, 4);
    CHECK(rho[0] == doctest::Approx(0.2));
    CHECK(rho[1] == doctest::Approx(0.2));
    CHECK(rho[2] == doctest::Approx(0.8));
    CHECK(rho[3] == doctest::Approx(0.8));

    TempFile bad("profile_bad.csv", "rho\n0.5\n");
    CHECK_THROWS_AS(io::read_profile_csv(bad.path), ValidationError);
    TempFile unsorted("profile_unsorted.csv", "x,rho\n0.8,0.2\n0.4,0.6\n");
    CHECK_THROWS_AS(io::read_profile_csv(unsorted.path), ValidationError);
}

TEST_CASE("word CSV") {
    TempFile f("words.csv", "word\n0110\n1010\n");
    auto words = io::read_words_csv(f.path);
    CHECK(words.size() == 2);
    CHECK(words[0] == "0110");
    auto w = io::word_from_string(words[0], 2);
    CHECK(w.symbols == std::vector<int>{0, 1, 1, 0});
    CHECK_THROWS_AS(io::word_from_string("01a", 2), ValidationError);
    CHECK_THROWS_AS(io::word_from_string("012", 2), ValidationError);
}

TEST_CASE("pair measure CSV") {
    TempFile f("nu2.csv", "word,mass\n00,0.4\n01,0.1\n10,0.1\n11,0.4\n");
    auto nu = io::read_kword_csv(f.path, 2, 2);
    CHECK(nu.weights[0] == doctest::Approx(0.4));
    CHECK(nu.weights[1] == doctest::Approx(0.1));
    CHECK(sum(nu.weights) == doctest::Approx(1.0));

    TempFile bad("nu2_bad.csv", "word,mass\n000,0.4\n");
    CHECK_THROWS_AS(io::read_kword_csv(bad.path, 2, 2), ValidationError);
}
