#pragma once

#include "finlit/dataset.hpp"

#include <string>
#include <vector>

namespace finlit {

struct ReportRow {
    std::string estimator;
    bool ok = false;
    EstimateResult result;
    std::string error;
};

struct Report {
    std::string title;
    std::vector<ReportRow> rows;
};

// Fixed-precision rendering so identical runs produce identical bytes.
std::string report_to_text(const Report& report);
std::string report_to_csv(const Report& report);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace finlit
