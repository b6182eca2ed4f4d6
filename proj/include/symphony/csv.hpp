// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "symphony/matrix.hpp"

namespace symphony {

// Stamp appended as a "# manifest <hash>" comment to every CSV opened while
// set; the runners set it to the active run's manifest hash.
void set_csv_run_stamp(const std::string& stamp);

// CSV emitter with a fixed column order. The first line is a schema comment
// ("# schema <name> v1"); a gnuplot-friendly space-separated .dat mirror is
// written next to the CSV. Non-timing numeric cells use format_g12, so a
// repeated run produces byte-identical files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& schema_name,
              const std::vector<std::string>& columns);

    void row(const std::vector<std::string>& cells);

    static std::string num(double v);
    static std::string num(std::uint64_t v);
    static std::string num(long v);
    static std::string num(int v);
    static std::string joined(std::span<const double> values); // semicolon-separated

private:
    std::ofstream csv_;
    std::ofstream dat_;
    std::size_t columns_ = 0;
    std::string path_;
};

} // namespace symphony
