#include "dofprior/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "dofprior/errors.hpp"

namespace dofprior {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

}  // namespace

CsvTable read_csv_table(std::istream& in) {
    CsvTable t;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = split(line);
        for (auto& f : fields) f = trim(f);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
    }
    if (!have_header) throw DataError("CSV input is empty");
    return t;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& field, int line) {
    if (field == "nan" || field == "NaN") return std::nan("");
    if (field == "inf") return INFINITY;
    if (field == "-inf") return -INFINITY;
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    if (first != last && *first == '+') ++first;
    auto res = std::from_chars(first, last, v);
    if (field.empty() || res.ec != std::errc() || res.ptr != last)
        throw DataError("line " + std::to_string(line) + ": non-numeric value '" + field + "'");
    return v;
}

Matrix read_numeric_csv(std::istream& in, std::vector<std::string>* header) {
    const auto t = read_csv_table(in);
    Matrix m(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    // blank lines are skipped, so recount line numbers for messages
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            const double v = parse_double(t.rows[i][j], static_cast<int>(i) + 2);
            if (!std::isfinite(v))
                throw DataError("line " + std::to_string(i + 2) + ": missing or non-finite value");
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    if (header) *header = t.header;
    return m;
}

Matrix read_numeric_csv_file(const std::string& path, std::vector<std::string>* header) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path + " (file not found)");
    return read_numeric_csv(in, header);
}

void write_numeric_csv(std::ostream& out, const std::vector<std::string>& header, const Matrix& data) {
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data(i, j));
        out << '\n';
    }
}

}  // namespace dofprior
