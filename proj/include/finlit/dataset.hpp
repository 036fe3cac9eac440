#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace finlit {

// Potential outcomes under control and treatment, available only for
// synthetic data where the generating process is known.
struct OraclePotentials {
    Eigen::VectorXd y0;
    Eigen::VectorXd y1;
};

// One observational study: encoded covariates, binary treatment, outcome.
// Immutable after construction; estimators may read it concurrently.
struct Dataset {
    Eigen::MatrixXd covariates;            // n x d
    std::vector<int> treatment;            // entries in {0,1}
    Eigen::VectorXd outcome;
    std::vector<std::string> covariate_names;
    std::optional<OraclePotentials> oracle;

    Eigen::Index n() const { return covariates.rows(); }
    Eigen::Index dim() const { return covariates.cols(); }
    int n_treated() const;
    int n_control() const;
};

struct ValidationReport {
    bool ok = false;
    long n = 0;
    long d = 0;
    long n_treated = 0;
    long n_control = 0;
    std::vector<std::string> violations;
};

// Checks the Dataset invariants. Violations are reported as data, never
// thrown; every estimator accepts any dataset that passes.
ValidationReport validate_dataset(const Dataset& ds);

// Two disjoint halves of 1..n used for cross-fitting.
struct FoldSplit {
    std::vector<int> fold1;
    std::vector<int> fold2;
    std::uint64_t seed = 0;
};

// Random half split, deterministic for a fixed seed. Retries (bounded)
// until each fold holds at least `min_per_arm` treated and control units;
// throws if no such split is found.
FoldSplit split_random(const Dataset& ds, std::uint64_t seed, int min_per_arm = 1);

struct EstimateResult {
    double tau_hat = 0.0;
    double var_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::string method;
    long n_treated = 0;
    long n_control = 0;
    std::map<std::string, double> diagnostics;
};

// Fills ci bounds as tau_hat -/+ 1.96*sqrt(var_hat).
void apply_normal_ci(EstimateResult& r);

// CSV round trip. Column roles are named by the caller: one 0/1 treatment
// column, one outcome column, remaining columns are covariates (header order).
Dataset load_dataset_csv(const std::string& path,
                         const std::string& treatment_column,
                         const std::string& outcome_column);
void save_dataset_csv(const Dataset& ds, const std::string& path,
                      const std::string& treatment_column = "Z",
                      const std::string& outcome_column = "Y");

}  // namespace finlit
