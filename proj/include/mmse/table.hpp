#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmse/audit.hpp"

namespace mmse {

// Fixed result-table schema; one row per (grid point, run) plus per-point
// mean and std aggregate rows (run column "mean" / "std").
inline const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols{
        "point_id", "run",       "sigma",      "d",
        "n",        "m",         "mse_train",  "mse_val",
        "eps_c_h",  "eps_c_b",   "eps_c_tilde", "eps_g",
        "eps_a",    "eps_a_mode", "lb_train",   "lb_val",
        "mmse_mc",  "mmse_se",   "vacuous_train", "vacuous_val",
        "error"};
    return cols;
}

namespace detail {

inline std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string opt_num(const std::optional<double>& v) {
    return v ? fmt_num(*v) : std::string{};
}

// numeric columns that participate in the aggregate rows
inline const std::vector<std::string>& aggregated_columns() {
    static const std::vector<std::string> cols{
        "mse_train", "mse_val", "eps_c_h", "eps_c_b", "eps_c_tilde",
        "eps_g",     "eps_a",   "lb_train", "lb_val",  "mmse_mc",
        "mmse_se",   "vacuous_train", "vacuous_val"};
    return cols;
}

}  // namespace detail

inline std::vector<std::string> record_row(const RunRecord& r) {
    const BoundReport& b = r.report;
    std::vector<std::string> row;
    row.push_back(std::to_string(r.point_id));
    row.push_back(std::to_string(r.run));
    if (r.ok()) {
        row.push_back(detail::fmt_num(r.sigma));
        row.push_back(std::to_string(r.d));
        row.push_back(std::to_string(r.n));
        row.push_back(std::to_string(r.m));
        row.push_back(detail::fmt_num(b.mse_train));
        row.push_back(detail::opt_num(b.mse_val));
        row.push_back(detail::fmt_num(b.eps_c_hoeffding));
        row.push_back(detail::opt_num(b.eps_c_bernstein));
        row.push_back(detail::opt_num(b.eps_c_tilde));
        row.push_back(detail::opt_num(b.eps_g));
        row.push_back(detail::fmt_num(b.eps_a));
        row.push_back(to_string(b.eps_a_mode));
        row.push_back(detail::fmt_num(b.train_bound.value));
        row.push_back(b.val_bound ? detail::fmt_num(b.val_bound->value) : std::string{});
        row.push_back(detail::fmt_num(r.mmse_mc));
        row.push_back(detail::fmt_num(r.mmse_se));
        row.push_back(b.train_bound.vacuous ? "1" : "0");
        row.push_back(b.val_bound ? (b.val_bound->vacuous ? "1" : "0") : std::string{});
        row.push_back({});
    } else {
        row.push_back(detail::fmt_num(r.sigma));
        row.push_back(std::to_string(r.d));
        row.push_back(std::to_string(r.n));
        row.push_back(std::to_string(r.m));
        for (int i = 0; i < 7; ++i) row.push_back("nan");
        row.push_back({});  // eps_a_mode
        for (int i = 0; i < 6; ++i) row.push_back("nan");
        row.push_back(r.error);
    }
    return row;
}

struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::size_t col_index(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::invalid_argument("unknown column: " + name);
    }

    // numeric cell; empty cells surface as nan
    double num(std::size_t row, std::size_t col) const {
        const std::string& s = rows[row][col];
        if (s.empty()) return std::nan("");
        return std::strtod(s.c_str(), nullptr);
    }

    bool is_data_row(std::size_t row) const {
        const std::string& r = rows[row][1];
        return r != "mean" && r != "std";
    }
};

// Serializes records plus per-point aggregates into the fixed schema. The
// same input always produces the same bytes.
inline std::string to_csv(const std::vector<RunRecord>& records) {
    std::ostringstream out;
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i)
        out << cols[i] << (i + 1 < cols.size() ? ',' : '\n');

    CsvTable table;
    table.columns = cols;
    for (const RunRecord& r : records) table.rows.push_back(record_row(r));
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out << row[i] << (i + 1 < row.size() ? ',' : '\n');
    }

    // aggregate rows per point, over rows whose cells parsed as finite
    std::map<std::size_t, std::vector<std::size_t>> by_point;
    for (std::size_t i = 0; i < records.size(); ++i)
        by_point[records[i].point_id].push_back(i);

    for (const auto& [point, idxs] : by_point) {
        std::vector<std::string> mean_row(cols.size()), std_row(cols.size());
        mean_row[0] = std_row[0] = std::to_string(point);
        mean_row[1] = "mean";
        std_row[1] = "std";
        for (const char* name : {"sigma", "d", "n", "m"}) {
            const std::size_t c = table.col_index(name);
            mean_row[c] = std_row[c] = table.rows[idxs.front()][c];
        }
        mean_row[table.col_index("eps_a_mode")] =
            table.rows[idxs.front()][table.col_index("eps_a_mode")];
        for (const std::string& name : detail::aggregated_columns()) {
            const std::size_t c = table.col_index(name);
            std::vector<double> vals;
            for (std::size_t i : idxs) {
                const double v = table.num(i, c);
                if (std::isfinite(v)) vals.push_back(v);
            }
            if (vals.empty()) continue;
            const MeanVar mv = mean_var(vals);
            mean_row[c] = detail::fmt_num(mv.mean);
            std_row[c] = detail::fmt_num(std::sqrt(mv.var));
        }
        for (const auto* row : {&mean_row, &std_row})
            for (std::size_t i = 0; i < row->size(); ++i)
                out << (*row)[i] << (i + 1 < row->size() ? ',' : '\n');
    }
    return out.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << content;
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Minimal CSV reader for our own output (no quoting in the schema).
inline CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t start = 0;
        while (true) {
            const std::size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                cells.push_back(line.substr(start));
                break;
            }
            cells.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        if (header) {
            t.columns = std::move(cells);
            header = false;
        } else {
            if (cells.size() != t.columns.size())
                throw std::runtime_error("csv row width mismatch");
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

}  // namespace mmse
