#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace mscd::csv {

// Round-trip exact, locale-independent double formatting; keeps CSV output
// byte-identical across runs and thread counts.
inline std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

class Writer {
public:
    Writer(const std::string& path, const std::string& version_comment,
           const std::vector<std::string>& columns)
        : out_(path), n_columns_(columns.size()) {
        if (!out_) throw std::runtime_error("cannot open CSV for writing: " + path);
        out_ << "# " << version_comment << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }

    void row(const std::vector<double>& values) {
        if (values.size() != n_columns_)
            throw std::invalid_argument("CSV row width mismatch");
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << format_double(values[i]) << (i + 1 < values.size() ? "," : "\n");
    }

private:
    std::ofstream out_;
    std::size_t n_columns_;
};

struct Table {
    std::string version_comment;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);
    Table table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            table.version_comment = line.substr(1);
            if (!table.version_comment.empty() && table.version_comment.front() == ' ')
                table.version_comment.erase(0, 1);
            continue;
        }
        std::stringstream row(line);
        std::string cell;
        if (!have_header) {
            while (std::getline(row, cell, ',')) table.columns.push_back(cell);
            have_header = true;
            continue;
        }
        std::vector<double> values;
        while (std::getline(row, cell, ',')) values.push_back(std::stod(cell));
        if (values.size() != table.columns.size())
            throw std::runtime_error("CSV row width mismatch in " + path);
        table.rows.push_back(std::move(values));
    }
    return table;
}

} // namespace mscd::csv
