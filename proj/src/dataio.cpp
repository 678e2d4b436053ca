#include "gon/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gon/rng.hpp"

namespace gon {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        std::string_view piece(line.data() + start,
                               (comma == std::string::npos ? line.size() : comma) -
                                   start);
        fields.emplace_back(trim(piece));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

}  // namespace

CsvTable read_csv_table(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open data file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("data file has no header: " + path);
    table.header = split_fields(line);
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        auto fields = split_fields(line);
        if (fields.size() != table.header.size()) {
            std::ostringstream msg;
            msg << "row " << row << " has " << fields.size() << " fields, expected "
                << table.header.size();
            throw ParseError(row, 0, msg.str());
        }
        table.cells.push_back(std::move(fields));
    }
    return table;
}

namespace {

std::size_t column_index(const CsvTable& table, const std::string& name) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (table.header[c] == name) return c;
    }
    throw MissingColumn("column not found: " + name);
}

bool parse_cell(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

// Parses one typed column; bad cells are appended to issues as
// "row R column 'name'".
std::vector<double> typed_column(const CsvTable& table, std::size_t col,
                                 std::vector<std::string>& issues) {
    std::vector<double> out;
    out.reserve(table.rows());
    for (std::size_t r = 0; r < table.rows(); ++r) {
        double v = 0.0;
        if (!parse_cell(table.cells[r][col], v)) {
            std::ostringstream msg;
            msg << "row " << (r + 1) << " column '" << table.header[col]
                << "': bad value '" << table.cells[r][col] << "'";
            issues.push_back(msg.str());
            v = std::nan("");
        }
        out.push_back(v);
    }
    return out;
}

}  // namespace

Dataset dataset_from_table(const CsvTable& table, const std::string& label,
                           const std::vector<std::string>& features,
                           const std::vector<std::string>& cond) {
    if (table.rows() == 0) throw EmptyDataset("data file has no rows");
    Dataset ds;
    ds.rows = table.rows();
    ds.label_name = label;
    ds.cond_names = cond;

    std::vector<std::size_t> feature_cols;
    if (features.empty()) {
        for (std::size_t c = 0; c < table.header.size(); ++c) {
            const std::string& name = table.header[c];
            if (name == label) continue;
            if (std::find(cond.begin(), cond.end(), name) != cond.end()) continue;
            ds.feature_names.push_back(name);
            feature_cols.push_back(c);
        }
    } else {
        ds.feature_names = features;
        for (const auto& name : features) {
            feature_cols.push_back(column_index(table, name));
        }
    }
    if (ds.feature_names.empty()) {
        throw MissingColumn("no feature columns selected");
    }

    std::vector<std::string> issues;
    std::vector<std::vector<double>> fcols;
    fcols.reserve(feature_cols.size());
    for (std::size_t c : feature_cols) {
        fcols.push_back(typed_column(table, c, issues));
    }
    std::vector<std::vector<double>> zcols;
    for (const auto& name : cond) {
        zcols.push_back(typed_column(table, column_index(table, name), issues));
    }
    std::vector<double> ycol;
    if (!label.empty()) {
        ycol = typed_column(table, column_index(table, label), issues);
    }
    if (!issues.empty()) {
        std::ostringstream msg;
        msg << issues.size() << " unusable cells: " << issues[0];
        for (std::size_t i = 1; i < issues.size() && i < 5; ++i) {
            msg << "; " << issues[i];
        }
        if (issues.size() > 5) msg << "; ...";
        throw ParseError(0, 0, msg.str());
    }

    ds.x.resize(ds.rows * ds.dims());
    for (std::size_t r = 0; r < ds.rows; ++r) {
        for (std::size_t d = 0; d < ds.dims(); ++d) {
            ds.x[r * ds.dims() + d] = fcols[d][r];
        }
    }
    ds.z.resize(ds.rows * ds.cond_dims());
    for (std::size_t r = 0; r < ds.rows; ++r) {
        for (std::size_t i = 0; i < ds.cond_dims(); ++i) {
            ds.z[r * ds.cond_dims() + i] = zcols[i][r];
        }
    }
    ds.y = std::move(ycol);
    return ds;
}

Dataset load_csv(const std::string& path, const std::string& label,
                 const std::vector<std::string>& features,
                 const std::vector<std::string>& cond) {
    return dataset_from_table(read_csv_table(path), label, features, cond);
}

std::vector<double> Dataset::feature_column(std::size_t d) const {
    std::vector<double> col(rows);
    for (std::size_t r = 0; r < rows; ++r) col[r] = x[r * dims() + d];
    return col;
}

std::vector<double> Dataset::cond_column(std::size_t i) const {
    std::vector<double> col(rows);
    for (std::size_t r = 0; r < rows; ++r) col[r] = z[r * cond_dims() + i];
    return col;
}

namespace {

Dataset take_rows(const Dataset& ds, std::span<const std::size_t> idx) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.cond_names = ds.cond_names;
    out.label_name = ds.label_name;
    out.rows = idx.size();
    out.x.reserve(idx.size() * ds.dims());
    out.z.reserve(idx.size() * ds.cond_dims());
    for (std::size_t i : idx) {
        auto r = ds.row(i);
        out.x.insert(out.x.end(), r.begin(), r.end());
        auto c = ds.cond_row(i);
        out.z.insert(out.z.end(), c.begin(), c.end());
        if (ds.has_labels()) out.y.push_back(ds.y[i]);
    }
    return out;
}

}  // namespace

std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction,
                                  std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) {
        throw InvalidRange("split fraction must be strictly between 0 and 1");
    }
    if (ds.rows < 2) {
        throw EmptyDataset("cannot split fewer than 2 rows");
    }
    std::vector<std::size_t> order(ds.rows);
    for (std::size_t i = 0; i < ds.rows; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    auto left_n = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(ds.rows)));
    left_n = std::clamp<std::size_t>(left_n, 1, ds.rows - 1);
    std::span<const std::size_t> all(order);
    return {take_rows(ds, all.subspan(0, left_n)),
            take_rows(ds, all.subspan(left_n))};
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void save_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open data file for writing: " + path);
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c) out << ',';
        out << header[c];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) {
            throw InvalidRange("row width does not match header");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out << ',';
            out << format_double(row[c]);
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing data file: " + path);
}

}  // namespace gon
