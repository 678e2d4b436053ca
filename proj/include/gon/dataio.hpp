#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gon/errors.hpp"

namespace gon {

/// Raw CSV contents: header names plus string cells, no typing.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> cells;

    std::size_t rows() const { return cells.size(); }
};

/// Reads a comma-separated file with one header row. Rows whose field
/// count differs from the header raise ParseError naming the row.
CsvTable read_csv_table(const std::string& path);

/// Numeric training table: feature columns, optional conditional columns,
/// optional label column, all row-major.
struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::string> cond_names;
    std::string label_name;
    std::vector<double> x;  // rows * dims
    std::vector<double> z;  // rows * cond_dims
    std::vector<double> y;  // rows, empty when no label column was requested
    std::size_t rows = 0;

    std::size_t dims() const { return feature_names.size(); }
    std::size_t cond_dims() const { return cond_names.size(); }
    bool has_labels() const { return !y.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {x.data() + i * dims(), dims()};
    }
    std::span<const double> cond_row(std::size_t i) const {
        return {z.data() + i * cond_dims(), cond_dims()};
    }

    /// Column values for one feature (by position).
    std::vector<double> feature_column(std::size_t d) const;
    std::vector<double> cond_column(std::size_t i) const;
};

/// Types the requested columns of a table. An empty feature list selects
/// every column that is neither the label nor conditional. Cells that are
/// missing or parse to non-finite values are collected and reported in one
/// ParseError naming each bad row and column. label may be empty for
/// label-free evaluation data.
Dataset dataset_from_table(const CsvTable& table, const std::string& label,
                           const std::vector<std::string>& features,
                           const std::vector<std::string>& cond);

Dataset load_csv(const std::string& path, const std::string& label,
                 const std::vector<std::string>& features = {},
                 const std::vector<std::string>& cond = {});

/// Deterministic shuffled split; first round(fraction * rows) rows go left.
/// Both sides are non-empty or EmptyDataset is thrown.
std::pair<Dataset, Dataset> split(const Dataset& ds, double fraction,
                                  std::uint64_t seed);

/// Writes numeric rows with shortest round-trip formatting, so loading the
/// file back reproduces every double exactly.
void save_csv(const std::string& path, const std::vector<std::string>& header,
              const std::vector<std::vector<double>>& rows);

/// Shortest decimal form of v that parses back to exactly v.
std::string format_double(double v);

}  // namespace gon
