#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "claimcomb/data.hpp"
#include "claimcomb/errors.hpp"
#include "io_util.hpp"

namespace claimcomb::data {
namespace {

using detail::fmt_double;
using detail::parse_double;
using detail::parse_int;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

const std::vector<std::string> kColumns = {
    "veh_value", "exposure", "clm",      "numclaims", "claimcst0",
    "veh_body",  "veh_age",  "gender",   "area",      "agecat"};

} // namespace

std::vector<double> responses(std::span<const PolicyRecord> records) {
    std::vector<double> y;
    y.reserve(records.size());
    for (const auto& r : records) y.push_back(r.claimcst0);
    return y;
}

LoadResult load_policies(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error::data("cannot open dataset file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw Error::data("empty dataset file: " + path.string());
    const auto header = split_csv_line(line);

    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < header.size(); ++i) pos[header[i]] = i;
    for (const auto& col : kColumns) {
        if (!pos.count(col)) {
            throw Error::data("dataset is missing required column '" + col + "'");
        }
    }

    LoadResult out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() < header.size()) {
            throw Error::data("row " + std::to_string(line_no) + " has too few fields");
        }
        const std::string ctx = "row " + std::to_string(line_no);
        PolicyRecord r;
        r.veh_value = parse_double(fields[pos["veh_value"]], ctx);
        r.exposure = parse_double(fields[pos["exposure"]], ctx);
        r.clm = static_cast<int>(parse_int(fields[pos["clm"]], ctx));
        r.numclaims = static_cast<int>(parse_int(fields[pos["numclaims"]], ctx));
        r.claimcst0 = parse_double(fields[pos["claimcst0"]], ctx);
        r.veh_body = fields[pos["veh_body"]];
        r.veh_age = static_cast<int>(parse_int(fields[pos["veh_age"]], ctx));
        r.gender = fields[pos["gender"]];
        r.area = fields[pos["area"]];
        r.agecat = static_cast<int>(parse_int(fields[pos["agecat"]], ctx));

        if (r.claimcst0 < 0.0 || !std::isfinite(r.claimcst0)) {
            throw Error::data(ctx + ": negative or non-finite claimcst0");
        }
        if (!(r.exposure > 0.0 && r.exposure <= 1.0)) {
            out.warnings.push_back(ctx + ": exposure outside (0,1]");
        }
        const bool consistent = (r.clm == 1) == (r.numclaims >= 1) &&
                                (r.numclaims >= 1) == (r.claimcst0 > 0.0);
        if (!consistent) {
            out.warnings.push_back(ctx + ": clm/numclaims/claimcst0 are inconsistent");
        }
        out.records.push_back(std::move(r));
    }
    if (options.strict && !out.warnings.empty()) {
        throw Error::data("dataset failed strict consistency checks: " + out.warnings.front());
    }
    return out;
}

void write_policies_csv(const std::filesystem::path& path,
                        std::span<const PolicyRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::data("cannot write dataset file: " + path.string());
    for (std::size_t i = 0; i < kColumns.size(); ++i) {
        out << (i ? "," : "") << kColumns[i];
    }
    out << '\n';
    for (const auto& r : records) {
        out << fmt_double(r.veh_value) << ',' << fmt_double(r.exposure) << ','
            << r.clm << ',' << r.numclaims << ',' << fmt_double(r.claimcst0) << ','
            << r.veh_body << ',' << r.veh_age << ',' << r.gender << ',' << r.area
            << ',' << r.agecat << '\n';
    }
    if (!out) throw Error::data("failed while writing dataset file: " + path.string());
}

void write_prediction_matrix_csv(const std::filesystem::path& path,
                                 const PredictionMatrix& preds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error::data("cannot write predictions file: " + path.string());
    out << "row_id";
    for (const auto& name : preds.names()) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < preds.rows(); ++i) {
        out << i;
        for (std::size_t j = 0; j < preds.cols(); ++j) {
            out << ',' << fmt_double(preds(i, j));
        }
        out << '\n';
    }
    if (!out) throw Error::data("failed while writing predictions file: " + path.string());
}

PredictionMatrix load_prediction_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error::data("cannot open predictions file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error::data("empty predictions file: " + path.string());
    const auto header = split_csv_line(line);
    if (header.empty() || header[0] != "row_id") {
        throw Error::data("predictions file must start with a 'row_id' column");
    }
    std::vector<std::string> names(header.begin() + 1, header.end());
    std::vector<std::vector<double>> cols(names.size());

    std::size_t line_no = 1;
    std::size_t expected_row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error::data("predictions row " + std::to_string(line_no) +
                              " has wrong field count");
        }
        const std::string ctx = "predictions row " + std::to_string(line_no);
        const auto row_id = static_cast<std::size_t>(parse_int(fields[0], ctx));
        if (row_id != expected_row) {
            throw Error::data(ctx + ": row_id values must be 0,1,2,... in order");
        }
        ++expected_row;
        for (std::size_t j = 0; j < names.size(); ++j) {
            cols[j].push_back(parse_double(fields[j + 1], ctx));
        }
    }
    return PredictionMatrix(std::move(names), std::move(cols));
}

} // namespace claimcomb::data
