#include "splitinf/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "splitinf/error.hpp"

namespace splitinf {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

bool skippable(std::string_view line) {
    line = trim(line);
    return line.empty() || line.front() == '#';
}

} // namespace

std::string format_double(double value) {
    char buffer[64];
    const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, result.ptr);
}

double parse_double(std::string_view text) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
        throw InvalidArgument("csv: cannot parse number '" + std::string(text) + "'");
    }
    return value;
}

LoadedDataset read_dataset_csv(std::istream& in, const CsvReadOptions& options) {
    std::string line;
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::size_t line_no = 0;
    bool header_pending = options.header;
    while (std::getline(in, line)) {
        ++line_no;
        if (skippable(line)) continue;
        const auto fields = split_fields(line);
        if (header_pending) {
            for (auto f : fields) names.emplace_back(f);
            width = fields.size();
            header_pending = false;
            continue;
        }
        if (width == 0) width = fields.size();
        if (fields.size() != width) {
            throw InvalidArgument("csv: line " + std::to_string(line_no) + " has " +
                                  std::to_string(fields.size()) + " fields, expected " +
                                  std::to_string(width));
        }
        std::vector<double> row;
        row.reserve(width);
        for (auto f : fields) row.push_back(parse_double(f));
        rows.push_back(std::move(row));
    }
    if (width < 2) throw InvalidArgument("csv: need at least one covariate and a response column");
    if (names.empty()) {
        for (std::size_t c = 0; c < width; ++c) names.push_back("x" + std::to_string(c));
    }

    std::size_t response = width - 1;
    if (!options.response.empty()) {
        bool found = false;
        for (std::size_t c = 0; c < width; ++c) {
            if (names[c] == options.response) {
                response = c;
                found = true;
                break;
            }
        }
        if (!found && !options.header) {
            const double pos = parse_double(options.response);
            if (pos >= 0 && pos < static_cast<double>(width) && pos == static_cast<double>(static_cast<std::size_t>(pos))) {
                response = static_cast<std::size_t>(pos);
                found = true;
            }
        }
        if (!found) throw InvalidArgument("csv: response column '" + options.response + "' not found");
    }

    const auto n = static_cast<Index>(rows.size());
    Eigen::MatrixXd x(n, static_cast<Index>(width - 1));
    Eigen::VectorXd y(n);
    for (Index i = 0; i < n; ++i) {
        Index col = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const double v = rows[static_cast<std::size_t>(i)][c];
            if (c == response) {
                y(i) = v;
            } else {
                x(i, col++) = v;
            }
        }
    }
    std::vector<std::string> covariates;
    for (std::size_t c = 0; c < width; ++c)
        if (c != response) covariates.push_back(names[c]);
    return LoadedDataset{Dataset(std::move(x), std::move(y)), std::move(covariates), names[response]};
}

LoadedDataset read_dataset_csv(const std::string& path, const CsvReadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open input file '" + path + "'");
    return read_dataset_csv(in, options);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    for (Index j = 0; j < data.cols(); ++j) out << 'x' << j << ',';
    out << "y\n";
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) out << format_double(data.x()(i, j)) << ',';
        out << format_double(data.y()(i)) << '\n';
    }
}

std::vector<ConfidenceRow> rows_for(Parameter parameter, const IndexList& indices,
                                    const Eigen::VectorXd& estimate,
                                    const ConfidenceRectangle& rectangle) {
    std::vector<ConfidenceRow> rows;
    for (Index j = 0; j < rectangle.size(); ++j) {
        std::optional<Index> index;
        if (!indices.empty()) index = indices[static_cast<std::size_t>(j)];
        rows.push_back(ConfidenceRow{parameter, index, estimate(j), rectangle.lower()(j),
                                     rectangle.upper()(j), rectangle.level(), rectangle.method()});
    }
    return rows;
}

void write_confidence_csv(std::ostream& out, const std::vector<ConfidenceRow>& rows,
                          const std::vector<std::string>& comments) {
    for (const auto& c : comments) out << "# " << c << '\n';
    out << "parameter,index,estimate,lower,upper,level,method\n";
    for (const auto& r : rows) {
        out << to_string(r.parameter) << ',';
        if (r.index) out << *r.index;
        out << ',' << format_double(r.estimate) << ',' << format_double(r.lower) << ','
            << format_double(r.upper) << ',' << format_double(r.level) << ','
            << to_string(r.method) << '\n';
    }
}

} // namespace splitinf
