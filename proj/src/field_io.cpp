#include "lmce/field_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lmce {

std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

std::vector<double> parse_csv_doubles(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

void write_header(std::ofstream& out, const Grid& g, const std::vector<std::string>& cols) {
    out << "# n=" << g.n << " resolution=" << g.resolution << " lo=";
    for (int a = 0; a < g.n; ++a) out << (a ? "," : "") << format_full(g.lo[static_cast<std::size_t>(a)]);
    out << " hi=";
    for (int a = 0; a < g.n; ++a) out << (a ? "," : "") << format_full(g.hi[static_cast<std::size_t>(a)]);
    out << "\n# columns=";
    for (int a = 0; a < g.n; ++a) out << "x" << (a + 1) << ",";
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << "\n";
}

Grid parse_header(const std::string& line) {
    int n = 0, res = 0;
    std::array<double, 3> lo{}, hi{};
    std::stringstream ss(line);
    std::string tok;
    bool got_lo = false, got_hi = false;
    while (ss >> tok) {
        if (tok.rfind("n=", 0) == 0) n = std::stoi(tok.substr(2));
        else if (tok.rfind("resolution=", 0) == 0) res = std::stoi(tok.substr(11));
        else if (tok.rfind("lo=", 0) == 0) {
            auto v = parse_csv_doubles(tok.substr(3));
            for (std::size_t a = 0; a < v.size() && a < 3; ++a) lo[a] = v[a];
            got_lo = !v.empty();
        } else if (tok.rfind("hi=", 0) == 0) {
            auto v = parse_csv_doubles(tok.substr(3));
            for (std::size_t a = 0; a < v.size() && a < 3; ++a) hi[a] = v[a];
            got_hi = !v.empty();
        }
    }
    if (n < 2 || n > 3 || res < 5 || !got_lo || !got_hi)
        throw IoError("field csv: malformed header: " + line);
    return Grid(n, lo, hi, res);
}

} // namespace

void write_columns(const std::string& path, const Grid& g,
                   const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& data) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for write: " + path);
    write_header(out, g, columns);
    const std::size_t count = g.num_nodes();
    for (std::size_t i = 0; i < count; ++i) {
        const auto x = g.coord(g.unindex(i));
        for (int a = 0; a < g.n; ++a) out << (a ? "," : "") << format_full(x[static_cast<std::size_t>(a)]);
        for (const auto& col : data) out << "," << format_full(col[i]);
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

void write_field(const std::string& path, const ScalarField& f, const std::string& value_name) {
    write_columns(path, f.grid, {value_name}, {f.values});
}

ColumnsFile read_columns(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    ColumnsFile out;
    bool have_grid = false;
    std::size_t row = 0;
    std::size_t expect_cols = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            if (line.find("n=") != std::string::npos && line.find("resolution=") != std::string::npos) {
                out.grid = parse_header(line);
                have_grid = true;
                out.data.clear();
            } else if (line.find("columns=") != std::string::npos) {
                const auto pos = line.find("columns=");
                std::stringstream ss(line.substr(pos + 8));
                std::string c;
                out.columns.clear();
                while (std::getline(ss, c, ',')) out.columns.push_back(c);
            }
            continue;
        }
        if (!have_grid) throw IoError("field csv: data before header: " + path);
        if (out.data.empty()) {
            const auto probe = parse_csv_doubles(line);
            if (probe.size() <= static_cast<std::size_t>(out.grid.n))
                throw IoError("field csv: dimension mismatch (missing value column)");
            expect_cols = probe.size();
            out.data.assign(expect_cols - static_cast<std::size_t>(out.grid.n),
                            std::vector<double>(out.grid.num_nodes(), 0.0));
            for (std::size_t c = static_cast<std::size_t>(out.grid.n); c < probe.size(); ++c)
                out.data[c - static_cast<std::size_t>(out.grid.n)][0] = probe[c];
            row = 1;
            continue;
        }
        const auto vals = parse_csv_doubles(line);
        if (vals.size() != expect_cols)
            throw IoError("field csv: dimension mismatch at row " + std::to_string(row));
        if (row >= out.grid.num_nodes()) throw IoError("field csv: too many rows");
        for (std::size_t c = static_cast<std::size_t>(out.grid.n); c < vals.size(); ++c)
            out.data[c - static_cast<std::size_t>(out.grid.n)][row] = vals[c];
        ++row;
    }
    if (!have_grid) throw IoError("field csv: missing header: " + path);
    if (row != out.grid.num_nodes())
        throw IoError("field csv: node count mismatch: got " + std::to_string(row));
    // drop the coordinate names from `columns`
    if (out.columns.size() >= static_cast<std::size_t>(out.grid.n))
        out.columns.erase(out.columns.begin(), out.columns.begin() + out.grid.n);
    return out;
}

ScalarField read_field(const std::string& path) {
    ColumnsFile cf = read_columns(path);
    if (cf.data.empty()) throw IoError("field csv: no value column: " + path);
    ScalarField f(cf.grid);
    f.values = cf.data[0];
    return f;
}

} // namespace lmce
