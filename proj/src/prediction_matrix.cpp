#include "claimcomb/prediction_matrix.hpp"

#include <cmath>

#include "claimcomb/errors.hpp"

namespace claimcomb {
namespace {

void require_finite(const std::vector<double>& values, const std::string& name) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw Error::invalid("prediction column '" + name + "' contains a non-finite value");
        }
    }
}

} // namespace

PredictionMatrix::PredictionMatrix(std::vector<std::string> names,
                                   std::vector<std::vector<double>> columns) {
    if (names.size() != columns.size()) {
        throw Error::invalid("PredictionMatrix: name/column count mismatch");
    }
    if (!columns.empty()) rows_ = columns.front().size();
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].size() != rows_) {
            throw Error::invalid("PredictionMatrix: ragged columns");
        }
        require_finite(columns[j], names[j]);
    }
    names_ = std::move(names);
    columns_ = std::move(columns);
}

std::span<const double> PredictionMatrix::column(std::size_t j) const {
    if (j >= columns_.size()) throw Error::invalid("PredictionMatrix: column index out of range");
    return columns_[j];
}

const std::string& PredictionMatrix::name(std::size_t j) const {
    if (j >= names_.size()) throw Error::invalid("PredictionMatrix: column index out of range");
    return names_[j];
}

std::size_t PredictionMatrix::column_index(std::string_view name) const {
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (names_[j] == name) return j;
    }
    throw Error::invalid("PredictionMatrix: no column named '" + std::string(name) + "'");
}

void PredictionMatrix::add_column(std::string name, std::vector<double> values) {
    if (columns_.empty()) {
        rows_ = values.size();
    } else if (values.size() != rows_) {
        throw Error::invalid("PredictionMatrix::add_column: row count mismatch");
    }
    require_finite(values, name);
    names_.push_back(std::move(name));
    columns_.push_back(std::move(values));
}

PredictionMatrix PredictionMatrix::select_rows(std::span<const std::size_t> idx) const {
    std::vector<std::vector<double>> cols(columns_.size());
    for (std::size_t j = 0; j < columns_.size(); ++j) {
        cols[j].reserve(idx.size());
        for (std::size_t i : idx) {
            if (i >= rows_) throw Error::invalid("PredictionMatrix::select_rows: index out of range");
            cols[j].push_back(columns_[j][i]);
        }
    }
    return PredictionMatrix(names_, std::move(cols));
}

PredictionMatrix PredictionMatrix::select_columns(std::span<const std::size_t> idx) const {
    PredictionMatrix out;
    out.rows_ = rows_; // an empty selection still spans the same rows
    for (std::size_t j : idx) {
        if (j >= columns_.size()) {
            throw Error::invalid("PredictionMatrix::select_columns: index out of range");
        }
        out.names_.push_back(names_[j]);
        out.columns_.push_back(columns_[j]);
    }
    return out;
}

} // namespace claimcomb
