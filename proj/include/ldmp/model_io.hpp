#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ldmp/common.hpp"
#include "ldmp/empirical.hpp"
#include "ldmp/rational.hpp"
#include "ldmp/tasep.hpp"

namespace ldmp::io {

// Model files, CSV ingestion and deterministic number formatting for the
// command-line surface.

/// Locale-independent formatting, 12 significant digits.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return std::string(buf);
}

/// Parsed model file: either an explicit finite model or exclusion
/// parameters. Validation messages name the violated invariant.
struct ModelFile {
    bool is_tasep = false;
    rational::RationalModel model;  // when explicit
    double alpha = 0.0, beta = 0.0; // when tasep
};

inline ModelFile parse_model_json(const nlohmann::json& j) {
    ModelFile out;
    if (!j.contains("type")) throw ValidationError("model file: missing \"type\"");
    std::string type = j.at("type").get<std::string>();
    if (type == "tasep") {
        out.is_tasep = true;
        if (!j.contains("alpha") || !j.contains("beta"))
            throw ValidationError("model file: tasep requires \"alpha\" and \"beta\"");
        out.alpha = j.at("alpha").get<double>();
        out.beta = j.at("beta").get<double>();
        if (!(out.alpha > 0.0 && out.alpha <= 1.0 && out.beta > 0.0 && out.beta <= 1.0))
            throw ValidationError("model file: alpha and beta must lie in (0,1]");
        return out;
    }
    if (type != "explicit") throw ValidationError("model file: type must be explicit or tasep");
    if (!j.contains("alphabet_size") || !j.contains("matrices") || !j.contains("x") ||
        !j.contains("y"))
        throw ValidationError("model file: explicit requires alphabet_size, matrices, x, y");
    rational::RationalModel m;
    m.alphabet_size = j.at("alphabet_size").get<int>();
    const auto& mats = j.at("matrices");
    if (!mats.is_array() || mats.empty())
        throw ValidationError("model file: matrices must be a non-empty list");
    for (const auto& grid : mats) {
        if (!grid.is_array() || grid.empty() || !grid[0].is_array())
            throw ValidationError("model file: each matrix is a list of rows");
        int rows = static_cast<int>(grid.size());
        int cols = static_cast<int>(grid[0].size());
        if (rows != cols) throw ValidationError("model file: matrices must be square");
        Mat mat(rows, cols);
        for (int i = 0; i < rows; ++i) {
            if (static_cast<int>(grid[i].size()) != cols)
                throw ValidationError("model file: ragged matrix rows");
            for (int jj = 0; jj < cols; ++jj) mat(i, jj) = grid[i][jj].get<double>();
        }
        m.matrix_per_symbol.push_back(std::move(mat));
    }
    m.x = j.at("x").get<Vec>();
    m.y = j.at("y").get<Vec>();
    m.validate();  // throws with the violated invariant in the message
    out.model = std::move(m);
    return out;
}

inline ModelFile load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError(std::string("model file is not valid JSON: ") + e.what());
    }
    return parse_model_json(j);
}

// ------------------------------------------------------------- CSV input

namespace detail {
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}
}  // namespace detail

/// Header `x,rho`; each row gives the density on the cells up to x.
inline std::vector<std::pair<double, double>> read_profile_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open profile file: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line)[0] != "x")
        throw ValidationError("profile file: expected header x,rho");
    std::vector<std::pair<double, double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() < 2) throw ValidationError("profile file: rows need x,rho");
        rows.emplace_back(std::stod(cells[0]), std::stod(cells[1]));
    }
    if (rows.empty()) throw ValidationError("profile file: no rows");
    for (size_t i = 1; i < rows.size(); ++i)
        if (rows[i].first <= rows[i - 1].first)
            throw ValidationError("profile file: x must increase");
    return rows;
}

/// Piecewise-constant resampling onto L uniform cells.
inline Vec resample_profile(const std::vector<std::pair<double, double>>& rows, int cells) {
    Vec rho(cells, rows.back().second);
    for (int j = 0; j < cells; ++j) {
        double center = (j + 0.5) / cells;
        for (const auto& [x, r] : rows)
            if (x >= center) {
                rho[j] = r;
                break;
            }
    }
    return rho;
}

/// Header `word`; rows are compact digit strings like 0110.
inline std::vector<std::string> read_words_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open word file: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line)[0] != "word")
        throw ValidationError("word file: expected header word");
    std::vector<std::string> words;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        words.push_back(detail::split_csv_line(line)[0]);
    }
    if (words.empty()) throw ValidationError("word file: no rows");
    return words;
}

inline rational::Word word_from_string(const std::string& s, int alphabet) {
    std::vector<int> symbols;
    symbols.reserve(s.size());
    for (char c : s) {
        if (c < '0' || c > '9') throw ValidationError("word: symbols must be digits");
        symbols.push_back(c - '0');
    }
    return rational::Word(alphabet, symbols);
}

/// Header `word,mass`; an order-k measure over digit words.
inline empirical::KWordMeasure read_kword_csv(const std::string& path, int alphabet, int k) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open measure file: " + path);
    std::string line;
    if (!std::getline(in, line) || detail::split_csv_line(line)[0] != "word")
        throw ValidationError("measure file: expected header word,mass");
    auto nu = empirical::KWordMeasure::zero(alphabet, k);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() < 2) throw ValidationError("measure file: rows need word,mass");
        if (static_cast<int>(cells[0].size()) != k)
            throw ValidationError("measure file: word length must equal k");
        rational::Word w = word_from_string(cells[0], alphabet);
        nu.weights[nu.encode(w.symbols)] += std::stod(cells[1]);
    }
    return nu;
}

}  // namespace ldmp::io
