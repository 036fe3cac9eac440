#pragma once

#include "finlit/dataset.hpp"
#include "finlit/stat_models.hpp"

#include <optional>

namespace finlit {

// Pairwise distances between treated rows and control columns.
// +inf marks caliper-forbidden pairs.
struct DistanceMatrix {
    Eigen::MatrixXd entries;          // n1 x n0
    std::vector<int> treated_index;   // row -> unit
    std::vector<int> control_index;   // column -> unit
    double caliper = 0.0;             // 0 until caliper_filter is applied
    Eigen::VectorXd scores;           // propensity snapshot, set with the caliper
};

struct MatchSet {
    std::vector<std::pair<int, int>> pairs;  // (treated unit, control unit)
    std::vector<int> dropped_treated;
    double caliper = 0.0;
    double mean_score_gap = 0.0;
    double total_distance = 0.0;
};

struct BalanceReport {
    std::vector<std::string> names;  // covariates plus "propensity_score"
    Eigen::VectorXd pre;
    Eigen::VectorXd post;            // empty when no matches supplied
    std::vector<int> degenerate;     // zero pooled sd with unequal means
    bool has_post = false;
};

// Mahalanobis distance over column-wise average ranks (ties averaged);
// invariant to strictly monotone covariate transforms.
DistanceMatrix robust_mahalanobis(const Dataset& ds, int n_threads = 0);

// Forbids pairs with |e_i - e_k| > c * sd(e); sd over all n units.
DistanceMatrix caliper_filter(const DistanceMatrix& dist, const Eigen::VectorXd& e_hat,
                              double c);

// Minimum-total-distance 1:1 matching over the finite entries; treated
// units without a feasible control are dropped and reported.
MatchSet optimal_match(const DistanceMatrix& dist);

// Mean within-pair outcome difference over the matched treated units.
double matched_ate(const MatchSet& matches, const Dataset& ds);

// Abadie-Imbens style correction: subtracts the mu0-predicted gap between
// matched covariates. Variance is the paired-differences form.
EstimateResult bias_correct(const MatchSet& matches, const Dataset& ds,
                            const RegressionModel& mu0);

// Standardized mean differences pre (all units) and post (matched units),
// with the propensity score as a pseudo-covariate.
BalanceReport balance_table(const Dataset& ds, const MatchSet* matches,
                            const Eigen::VectorXd& e_hat);

void export_balance_csv(const BalanceReport& report, const std::string& path);

}  // namespace finlit
