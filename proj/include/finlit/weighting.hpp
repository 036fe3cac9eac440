#pragma once

#include "finlit/dataset.hpp"
#include "finlit/stat_models.hpp"

namespace finlit {

struct TruncationRule {
    bool enabled = true;
    double lo = 0.025;
    double hi = 0.975;
};

enum class VarianceMethod { bootstrap, plugin };

struct WeightingConfig {
    TruncationRule truncation;
    VarianceMethod variance_method = VarianceMethod::bootstrap;
    int bootstrap_replicates = 1000;  // >= 100 when bootstrap chosen
    std::uint64_t seed = 0;
    ModelKind outcome_model_kind = ModelKind::ols;  // AIPW nuisance
    int crossfit_folds = 2;
    LogisticConfig logistic;  // propensity refits inside the bootstrap
    ForestConfig forest;
    int n_threads = 0;
};

// Horvitz-Thompson: (1/n) sum [Z*Y/e - (1-Z)*Y/(1-e)].
EstimateResult estimate_ht(const Dataset& ds, const Eigen::VectorXd& e_hat,
                           const WeightingConfig& cfg);

// Hajek: self-normalized weighted arm means; location invariant.
EstimateResult estimate_hajek(const Dataset& ds, const Eigen::VectorXd& e_hat,
                              const WeightingConfig& cfg);

// AIPW with cross-fitted outcome models of cfg.outcome_model_kind.
EstimateResult estimate_aipw(const Dataset& ds, const Eigen::VectorXd& e_hat,
                             const WeightingConfig& cfg);

// AIPW with caller-supplied per-unit outcome predictions (length n each);
// variance is the plug-in influence-function form.
EstimateResult estimate_aipw_with_predictions(const Dataset& ds, const Eigen::VectorXd& e_hat,
                                              const Eigen::VectorXd& mu1,
                                              const Eigen::VectorXd& mu0,
                                              const WeightingConfig& cfg);

}  // namespace finlit
