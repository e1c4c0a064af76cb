#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "splitinf/confidence.hpp"
#include "splitinf/core.hpp"

namespace splitinf {

struct CsvReadOptions {
    bool header = true;
    // Column name (or 0-based position when there is no header). Empty selects
    // the last column.
    std::string response;
};

struct LoadedDataset {
    Dataset data;
    std::vector<std::string> covariate_names;
    std::string response_name;
};

LoadedDataset read_dataset_csv(std::istream& in, const CsvReadOptions& options);
LoadedDataset read_dataset_csv(const std::string& path, const CsvReadOptions& options);

void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_double(double value);
double parse_double(std::string_view text);

/// One line of the confidence-set schema
/// (parameter, index, estimate, lower, upper, level, method).
struct ConfidenceRow {
    Parameter parameter;
    std::optional<Index> index;  // empty for the scalar prediction parameter
    double estimate;
    double lower;
    double upper;
    double level;
    Method method;
};

std::vector<ConfidenceRow> rows_for(Parameter parameter, const IndexList& indices,
                                    const Eigen::VectorXd& estimate,
                                    const ConfidenceRectangle& rectangle);

// Comment lines are written first, each prefixed with "# ".
void write_confidence_csv(std::ostream& out, const std::vector<ConfidenceRow>& rows,
                          const std::vector<std::string>& comments = {});

} // namespace splitinf
