#include "finlit/dataset.hpp"

#include "finlit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace finlit {

int Dataset::n_treated() const {
    return static_cast<int>(std::count(treatment.begin(), treatment.end(), 1));
}

int Dataset::n_control() const {
    return static_cast<int>(std::count(treatment.begin(), treatment.end(), 0));
}

ValidationReport validate_dataset(const Dataset& ds) {
    ValidationReport rep;
    rep.n = static_cast<long>(ds.n());
    rep.d = static_cast<long>(ds.dim());

    if (rep.n < 2) rep.violations.push_back("fewer than 2 units");
    if (static_cast<long>(ds.treatment.size()) != rep.n)
        rep.violations.push_back("treatment length != n");
    if (ds.outcome.size() != rep.n)
        rep.violations.push_back("outcome length != n");
    if (static_cast<long>(ds.covariate_names.size()) != rep.d)
        rep.violations.push_back("covariate_names length != d");

    for (int z : ds.treatment) {
        if (z != 0 && z != 1) {
            rep.violations.push_back("treatment not binary");
            break;
        }
    }
    for (Eigen::Index i = 0; i < ds.outcome.size(); ++i) {
        if (!std::isfinite(ds.outcome[i])) {
            rep.violations.push_back("non-finite outcome");
            break;
        }
    }
    if (!ds.covariates.allFinite())
        rep.violations.push_back("non-finite covariate");

    rep.n_treated = ds.n_treated();
    rep.n_control = static_cast<long>(ds.treatment.size()) - rep.n_treated;
    if (rep.n_treated == 0) rep.violations.push_back("no treated units");
    if (rep.n_control == 0) rep.violations.push_back("no control units");

    if (ds.oracle) {
        const auto& o = *ds.oracle;
        if (o.y0.size() != rep.n || o.y1.size() != rep.n) {
            rep.violations.push_back("oracle length != n");
        } else {
            for (long i = 0; i < rep.n; ++i) {
                double expect = ds.treatment[static_cast<size_t>(i)] == 1 ? o.y1[i] : o.y0[i];
                if (ds.outcome[i] != expect) {
                    rep.violations.push_back("oracle inconsistent with observed outcome");
                    break;
                }
            }
        }
    }

    rep.ok = rep.violations.empty();
    return rep;
}

namespace {

bool fold_has_both_arms(const Dataset& ds, const std::vector<int>& fold, int min_per_arm) {
    int t = 0, c = 0;
    for (int i : fold) (ds.treatment[static_cast<size_t>(i)] == 1 ? t : c)++;
    return t >= min_per_arm && c >= min_per_arm;
}

}  // namespace

FoldSplit split_random(const Dataset& ds, std::uint64_t seed, int min_per_arm) {
    const int n = static_cast<int>(ds.n());
    if (n < 4) throw std::invalid_argument("split_random: need n >= 4");

    constexpr int kMaxRetries = 64;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        std::vector<int> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        auto eng = make_engine(seed, static_cast<std::uint64_t>(attempt));
        std::shuffle(perm.begin(), perm.end(), eng);

        FoldSplit s;
        s.seed = seed;
        const int half = (n + 1) / 2;  // fold1 gets ceil(n/2)
        s.fold1.assign(perm.begin(), perm.begin() + half);
        s.fold2.assign(perm.begin() + half, perm.end());
        std::sort(s.fold1.begin(), s.fold1.end());
        std::sort(s.fold2.begin(), s.fold2.end());
        if (fold_has_both_arms(ds, s.fold1, min_per_arm) &&
            fold_has_both_arms(ds, s.fold2, min_per_arm)) {
            return s;
        }
    }
    throw std::runtime_error(
        "split_random: no split with both arms per fold after bounded retries");
}

void apply_normal_ci(EstimateResult& r) {
    const double half = 1.96 * std::sqrt(r.var_hat);
    r.ci_low = r.tau_hat - half;
    r.ci_high = r.tau_hat + half;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Dataset load_dataset_csv(const std::string& path,
                         const std::string& treatment_column,
                         const std::string& outcome_column) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty dataset file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv_line(line);

    int z_col = -1, y_col = -1;
    std::vector<int> cov_cols;
    std::vector<std::string> cov_names;
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
        if (header[static_cast<size_t>(j)] == treatment_column) z_col = j;
        else if (header[static_cast<size_t>(j)] == outcome_column) y_col = j;
        else {
            cov_cols.push_back(j);
            cov_names.push_back(header[static_cast<size_t>(j)]);
        }
    }
    if (z_col < 0) throw std::runtime_error("treatment column not found: " + treatment_column);
    if (y_col < 0) throw std::runtime_error("outcome column not found: " + outcome_column);

    std::vector<std::vector<double>> rows;
    std::vector<int> zs;
    std::vector<double> ys;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("ragged CSV row in " + path);
        zs.push_back(static_cast<int>(std::stod(cells[static_cast<size_t>(z_col)])));
        ys.push_back(std::stod(cells[static_cast<size_t>(y_col)]));
        std::vector<double> row;
        row.reserve(cov_cols.size());
        for (int j : cov_cols) row.push_back(std::stod(cells[static_cast<size_t>(j)]));
        rows.push_back(std::move(row));
    }

    Dataset ds;
    const long n = static_cast<long>(rows.size());
    const long d = static_cast<long>(cov_cols.size());
    ds.covariates.resize(n, d);
    ds.outcome.resize(n);
    for (long i = 0; i < n; ++i) {
        ds.outcome[i] = ys[static_cast<size_t>(i)];
        for (long j = 0; j < d; ++j)
            ds.covariates(i, j) = rows[static_cast<size_t>(i)][static_cast<size_t>(j)];
    }
    ds.treatment = std::move(zs);
    ds.covariate_names = std::move(cov_names);
    return ds;
}

void save_dataset_csv(const Dataset& ds, const std::string& path,
                      const std::string& treatment_column,
                      const std::string& outcome_column) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    out << treatment_column << ',' << outcome_column;
    for (const auto& name : ds.covariate_names) out << ',' << name;
    out << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        out << ds.treatment[static_cast<size_t>(i)] << ',' << ds.outcome[i];
        for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ',' << ds.covariates(i, j);
        out << '\n';
    }
}

}  // namespace finlit
