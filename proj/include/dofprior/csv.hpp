#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dofprior/mathcore.hpp"

namespace dofprior {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Comma-separated text with a header row. Rows whose field count differs from
// the header raise DataError naming the line.
CsvTable read_csv_table(std::istream& in);

// Shortest text that parses back to the same double ("nan", "inf", "-inf"
// for non-finite values).
std::string format_double(double x);
// Strict parse of a whole field; `line` is used in the error message.
double parse_double(const std::string& field, int line);

// Numeric matrix from a CSV with a header row; any non-numeric or empty cell
// is rejected with its line number.
Matrix read_numeric_csv(std::istream& in, std::vector<std::string>* header = nullptr);
Matrix read_numeric_csv_file(const std::string& path, std::vector<std::string>* header = nullptr);
void write_numeric_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& data);

}  // namespace dofprior
