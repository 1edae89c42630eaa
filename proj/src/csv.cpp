#include "onestep/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "onestep/errors.hpp"

namespace onestep::csv {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
    throw ParseError(path + ":" + std::to_string(line) + ": " + what);
}

void check_header(const Table& t, const std::vector<std::string>& expected,
                  const std::string& path) {
    if (t.header != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size() && i < 6; ++i)
            want += (i ? "," : "") + expected[i];
        if (expected.size() > 6) want += ",...";
        fail(path, 1, "unexpected header (want `" + want + "`)");
    }
}

void check_width(const Table& t, std::size_t cols, const std::string& path) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r].size() != cols)
            fail(path, r + 2,
                 "expected " + std::to_string(cols) + " cells, found " +
                     std::to_string(t.rows[r].size()));
}

std::vector<std::string> indexed_names(const char* stem, std::size_t count) {
    std::vector<std::string> names(count);
    for (std::size_t i = 0; i < count; ++i)
        names[i] = std::string(stem) + "_" + std::to_string(i + 1);
    return names;
}

}  // namespace

Table read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.peek() == std::ifstream::traits_type::eof()) break;
            fail(path, lineno, "blank line");
        }
        if (lineno == 1)
            t.header = split_line(line);
        else
            t.rows.push_back(split_line(line));
    }
    if (t.header.empty()) fail(path, 1, "missing header");
    return t;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t line) {
    if (cell.empty()) fail(path, line, "empty numeric cell");
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || errno == ERANGE)
        fail(path, line, "cannot parse '" + cell + "' as a number");
    return v;
}

std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void atomic_write_text(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open '" + tmp + "' for writing");
        out << text;
        out.flush();
        if (!out) {
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw ValidationError("write failed for '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ValidationError("cannot rename temporary onto '" + path + "'");
    }
}

UnivariateData read_univariate(const std::string& path) {
    Table t = read_table(path);
    check_header(t, {"z"}, path);
    check_width(t, 1, path);
    std::vector<double> z(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) z[r] = parse_cell(t.rows[r][0], path, r + 2);
    return UnivariateData(std::move(z));
}

void write_univariate(const std::string& path, const UnivariateData& data) {
    std::string out = "z\n";
    for (double v : data.values()) out += format_value(v) + "\n";
    atomic_write_text(path, out);
}

CausalData read_causal(const std::string& path) {
    Table t = read_table(path);
    if (t.header.size() < 3) fail(path, 1, "causal data needs x_1,...,x_d,a,y");
    const std::size_t d = t.header.size() - 2;
    std::vector<std::string> expected = indexed_names("x", d);
    expected.push_back("a");
    expected.push_back("y");
    check_header(t, expected, path);
    check_width(t, d + 2, path);

    const std::size_t n = t.rows.size();
    std::vector<double> x(n * d), y(n, 0.0);
    std::vector<std::uint8_t> a(n), obs(n);
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t line = r + 2;
        for (std::size_t j = 0; j < d; ++j) x[r * d + j] = parse_cell(t.rows[r][j], path, line);
        const double av = parse_cell(t.rows[r][d], path, line);
        if (av != 0.0 && av != 1.0) fail(path, line, "a must be 0 or 1");
        a[r] = static_cast<std::uint8_t>(av);
        const std::string& ycell = t.rows[r][d + 1];
        if (ycell.empty()) {
            obs[r] = 0;
        } else {
            obs[r] = 1;
            y[r] = parse_cell(ycell, path, line);
        }
    }
    return CausalData(std::move(x), d, std::move(a), std::move(y), std::move(obs));
}

void write_causal(const std::string& path, const CausalData& data) {
    std::string out;
    for (std::size_t j = 0; j < data.dim(); ++j) out += "x_" + std::to_string(j + 1) + ",";
    out += "a,y\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (std::size_t j = 0; j < data.dim(); ++j) out += format_value(data.x(i, j)) + ",";
        out += std::to_string(data.a(i));
        out += ",";
        if (data.y_observed(i)) out += format_value(data.y(i));
        out += "\n";
    }
    atomic_write_text(path, out);
}

InfluenceMatrix read_influence(const std::string& path, const std::string& functional_id) {
    Table t = read_table(path);
    if (t.header.size() < 2) fail(path, 1, "influence matrix needs plugin,psi_1,...,psi_n");
    const std::size_t n = t.header.size() - 1;
    std::vector<std::string> expected = {"plugin"};
    for (const auto& name : indexed_names("psi", n)) expected.push_back(name);
    check_header(t, expected, path);
    check_width(t, n + 1, path);
    if (t.rows.empty()) fail(path, 2, "no draws");

    InfluenceMatrix infl(t.rows.size(), n, functional_id);
    for (std::size_t b = 0; b < t.rows.size(); ++b) {
        const std::size_t line = b + 2;
        infl.plugin[b] = parse_cell(t.rows[b][0], path, line);
        double* row = infl.row(b);
        for (std::size_t i = 0; i < n; ++i) row[i] = parse_cell(t.rows[b][i + 1], path, line);
    }
    infl.validate();
    return infl;
}

void write_influence(const std::string& path, const InfluenceMatrix& infl) {
    infl.validate();
    std::string out = "plugin";
    for (std::size_t i = 0; i < infl.n; ++i) out += ",psi_" + std::to_string(i + 1);
    out += "\n";
    for (std::size_t b = 0; b < infl.draws(); ++b) {
        out += format_value(infl.plugin[b]);
        const double* row = infl.row(b);
        for (std::size_t i = 0; i < infl.n; ++i) out += "," + format_value(row[i]);
        out += "\n";
    }
    atomic_write_text(path, out);
}

void write_corrected(const std::string& path, const CorrectedDraws& draws) {
    draws.validate();
    std::string out = "draw,value\n";
    for (std::size_t b = 0; b < draws.values.size(); ++b)
        out += std::to_string(b + 1) + "," + format_value(draws.values[b]) + "\n";
    atomic_write_text(path, out);
}

std::vector<dpmm::MixtureDraw> read_mixtures(const std::string& path) {
    Table t = read_table(path);
    if (t.header.size() < 3 || (t.header.size() - 1) % 2 != 0)
        fail(path, 1, "mixture draws need sigma,w_1..w_H,mu_1..mu_H");
    const std::size_t h = (t.header.size() - 1) / 2;
    std::vector<std::string> expected = {"sigma"};
    for (const auto& name : indexed_names("w", h)) expected.push_back(name);
    for (const auto& name : indexed_names("mu", h)) expected.push_back(name);
    check_header(t, expected, path);
    check_width(t, 1 + 2 * h, path);
    if (t.rows.empty()) fail(path, 2, "no draws");

    std::vector<dpmm::MixtureDraw> draws;
    draws.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::size_t line = r + 2;
        dpmm::MixtureDraw mix;
        mix.sigma = parse_cell(t.rows[r][0], path, line);
        mix.weights.resize(h);
        mix.atoms.resize(h);
        for (std::size_t k = 0; k < h; ++k) {
            mix.weights[k] = parse_cell(t.rows[r][1 + k], path, line);
            mix.atoms[k] = parse_cell(t.rows[r][1 + h + k], path, line);
        }
        mix.validate();
        draws.push_back(std::move(mix));
    }
    return draws;
}

void write_mixtures(const std::string& path, std::span<const dpmm::MixtureDraw> draws) {
    if (draws.empty()) throw ShapeError("write_mixtures: no draws");
    const std::size_t h = draws[0].components();
    std::string out = "sigma";
    for (std::size_t k = 0; k < h; ++k) out += ",w_" + std::to_string(k + 1);
    for (std::size_t k = 0; k < h; ++k) out += ",mu_" + std::to_string(k + 1);
    out += "\n";
    for (const auto& mix : draws) {
        mix.validate();
        if (mix.components() != h) throw ShapeError("write_mixtures: ragged component counts");
        out += format_value(mix.sigma);
        for (double w : mix.weights) out += "," + format_value(w);
        for (double m : mix.atoms) out += "," + format_value(m);
        out += "\n";
    }
    atomic_write_text(path, out);
}

}  // namespace onestep::csv
