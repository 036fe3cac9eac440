#include "finlit/report.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace finlit {

namespace {

std::string fmt(double v, int prec = 6) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(prec) << v;
    return os.str();
}

}  // namespace

std::string report_to_text(const Report& report) {
    std::ostringstream os;
    if (!report.title.empty()) os << report.title << '\n';
    os << std::left << std::setw(28) << "Estimator" << std::setw(14) << "ATE"
       << std::setw(14) << "V_hat" << "95% CI\n";
    for (const auto& row : report.rows) {
        os << std::left << std::setw(28) << row.estimator;
        if (row.ok) {
            os << std::setw(14) << fmt(row.result.tau_hat) << std::setw(14)
               << fmt(row.result.var_hat) << fmt(row.result.ci_low) << " - "
               << fmt(row.result.ci_high) << '\n';
        } else {
            os << "error: " << row.error << '\n';
        }
    }
    return os.str();
}

std::string report_to_csv(const Report& report) {
    std::ostringstream os;
    os << "estimator,ate,var_hat,ci_low,ci_high,n_treated,n_control,status\n";
    for (const auto& row : report.rows) {
        os << row.estimator << ',';
        if (row.ok) {
            os << fmt(row.result.tau_hat, 12) << ',' << fmt(row.result.var_hat, 12) << ','
               << fmt(row.result.ci_low, 12) << ',' << fmt(row.result.ci_high, 12) << ','
               << row.result.n_treated << ',' << row.result.n_control << ",ok\n";
        } else {
            os << ",,,,,," << "error: " << row.error << '\n';
        }
    }
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

}  // namespace finlit
