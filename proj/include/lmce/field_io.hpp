#pragma once

#include <string>
#include <vector>

#include "lmce/grid.hpp"

namespace lmce {

// Field CSV format: comment header lines starting with '#' carrying
//   # n=2 resolution=129 lo=-1,-1 hi=1,1
//   # columns=x1,x2,u
// then one row per node in row-major order: coordinates, value(s).
// Decimals are printed with 17 significant digits, so a round trip is
// bit-exact.

void write_field(const std::string& path, const ScalarField& f, const std::string& value_name = "u");
ScalarField read_field(const std::string& path);

// Generic multi-column variant used by the CLI emitters; `columns` excludes
// the coordinate columns.
void write_columns(const std::string& path, const Grid& g,
                   const std::vector<std::string>& columns,
                   const std::vector<std::vector<double>>& data);

struct ColumnsFile {
    Grid grid;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;
};
ColumnsFile read_columns(const std::string& path);

std::string format_full(double v);  // %.17g

} // namespace lmce
