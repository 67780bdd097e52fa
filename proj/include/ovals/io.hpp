#ifndef OVALS_IO_HPP
#define OVALS_IO_HPP

// Deterministic CSV emission and parsing. All numeric output goes through
// one shortest-round-trip formatter so that identical inputs produce
// byte-identical files on every run (acceptance requires reproducible
// artifacts, so no locales, no timestamps, no pointer-order iteration).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ovals {

// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; prec++) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // one vector per header entry

    std::size_t rows() const { return columns.empty() ? 0 : columns[0].size(); }

    const std::vector<double>& col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); i++)
            if (header[i] == name) return columns[i];
        throw std::out_of_range("CsvTable: no column " + name);
    }
};

inline void write_csv(const std::string& path, const CsvTable& t) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t i = 0; i < t.header.size(); i++)
        out << (i ? "," : "") << t.header[i];
    out << "\n";
    std::size_t n = t.rows();
    for (const auto& c : t.columns)
        if (c.size() != n) throw std::runtime_error("write_csv: ragged columns");
    for (std::size_t r = 0; r < n; r++) {
        for (std::size_t i = 0; i < t.columns.size(); i++)
            out << (i ? "," : "") << format_double(t.columns[i][r]);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("read_csv: empty file");
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(cell);
    t.columns.resize(t.header.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::size_t i = 0;
        while (std::getline(ls, cell, ',')) {
            if (i >= t.columns.size())
                throw std::runtime_error("read_csv: extra cell in " + path);
            t.columns[i++].push_back(std::strtod(cell.c_str(), nullptr));
        }
        if (i != t.columns.size())
            throw std::runtime_error("read_csv: short row in " + path);
    }
    return t;
}

}  // namespace ovals

#endif
