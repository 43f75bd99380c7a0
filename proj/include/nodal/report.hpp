#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nodal {

// Money and MW fields are rounded to 1e-6 so report bytes are stable
// across runs with identical inputs.
inline std::string format_quantity(double x) {
    if (std::fabs(x) < 5e-7) x = 0.0; // avoid "-0.000000"
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

using TableRow = std::vector<std::string>;

inline void write_table(const std::filesystem::path& dir, const std::string& name,
                        const TableRow& header, const std::vector<TableRow>& rows) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
    auto emit = [&out](const TableRow& row) {
        for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
        out << "\n";
    };
    emit(header);
    for (const TableRow& row : rows) emit(row);
}

} // namespace nodal
