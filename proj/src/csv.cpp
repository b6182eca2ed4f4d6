// SPDX-License-Identifier: Apache-2.0
#include "symphony/csv.hpp"

#include "symphony/errors.hpp"
#include "symphony/io.hpp"

namespace symphony {

namespace {

std::string mirror_path(const std::string& path) {
    const auto dot = path.rfind('.');
    if (dot == std::string::npos) return path + ".dat";
    return path.substr(0, dot) + ".dat";
}

std::string g_run_stamp;

} // namespace

void set_csv_run_stamp(const std::string& stamp) { g_run_stamp = stamp; }

CsvWriter::CsvWriter(const std::string& path, const std::string& schema_name,
                     const std::vector<std::string>& columns)
    : csv_(path), dat_(mirror_path(path)), columns_(columns.size()), path_(path) {
    if (!csv_ || !dat_) throw IoError("cannot write " + path);
    csv_ << "# schema " << schema_name << " v1\n";
    dat_ << "# schema " << schema_name << " v1\n";
    if (!g_run_stamp.empty()) {
        csv_ << "# manifest " << g_run_stamp << "\n";
        dat_ << "# manifest " << g_run_stamp << "\n";
    }
    dat_ << "# ";
    for (std::size_t i = 0; i < columns.size(); ++i) {
        csv_ << (i ? "," : "") << columns[i];
        dat_ << (i ? " " : "") << columns[i];
    }
    csv_ << "\n";
    dat_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw ArgumentError("csv row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        csv_ << (i ? "," : "") << cells[i];
        dat_ << (i ? " " : "") << cells[i];
    }
    csv_ << "\n";
    dat_ << "\n";
    if (!csv_ || !dat_) throw IoError("write failed for " + path_);
}

std::string CsvWriter::num(double v) { return format_g12(v); }
std::string CsvWriter::num(std::uint64_t v) { return std::to_string(v); }
std::string CsvWriter::num(long v) { return std::to_string(v); }
std::string CsvWriter::num(int v) { return std::to_string(v); }

std::string CsvWriter::joined(std::span<const double> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ';';
        s += format_g12(values[i]);
    }
    return s;
}

} // namespace symphony
