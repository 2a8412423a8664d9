#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace claimcomb {

// n x K matrix of candidate predictions, one named column per forecaster.
// Column-major storage; entries are validated finite on construction.
class PredictionMatrix {
public:
    PredictionMatrix() = default;
    PredictionMatrix(std::vector<std::string> names,
                     std::vector<std::vector<double>> columns);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return columns_.size(); }

    std::span<const double> column(std::size_t j) const;
    const std::string& name(std::size_t j) const;
    const std::vector<std::string>& names() const { return names_; }

    // Index of a named column; throws if absent.
    std::size_t column_index(std::string_view name) const;

    double operator()(std::size_t i, std::size_t j) const {
        return columns_[j][i];
    }

    void add_column(std::string name, std::vector<double> values);

    PredictionMatrix select_rows(std::span<const std::size_t> idx) const;
    PredictionMatrix select_columns(std::span<const std::size_t> idx) const;

private:
    std::size_t rows_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> columns_;
};

} // namespace claimcomb
