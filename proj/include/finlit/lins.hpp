#pragma once

#include "finlit/dataset.hpp"
#include "finlit/stat_models.hpp"

#include <memory>

namespace finlit {

enum class Arm { treated, control };

// A fitted outcome model plus the mean-residual shift that makes it
// unbiased on the opposite fold's arm.
struct DebiasedModel {
    std::shared_ptr<const RegressionModel> base;
    double shift = 0.0;
    Arm arm = Arm::treated;

    double predict_one(const Eigen::RowVectorXd& x) const {
        return base->predict_one(x) + shift;
    }
};

// shift = mean over the arm's units in (X, Y, Z) of Y - base.predict(X).
DebiasedModel debias_model(std::shared_ptr<const RegressionModel> model,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                           const std::vector<int>& Z, Arm arm);

struct LinsFoldStats {
    double tau = 0.0;
    double var = 0.0;
    double sigma2_1 = 0.0;
    double sigma2_0 = 0.0;
    double sigma2_tau = 0.0;
    long n = 0, n_treated = 0, n_control = 0;
};

struct LinsResult {
    EstimateResult estimate;
    LinsFoldStats fold1, fold2;
};

struct LinsConfig {
    ModelKind model_kind = ModelKind::ols;
    std::uint64_t seed = 0;
    ForestConfig forest;
    // covariate-mean imbalance above this sets the "imbalance_flag" diagnostic
    double imbalance_warn = 0.25;
};

// Two-fold cross-fitted regression-adjustment estimator: per-fold arm models
// trained on one half, shifted on the other, fold estimates combined by
// |I_k|/n weights (squared weights for the variance).
LinsResult crossfit_lins(const Dataset& ds, const LinsConfig& cfg);

// Same computation on a caller-supplied split (exact fixtures, fold-swap tests).
LinsResult crossfit_lins_with_split(const Dataset& ds, const FoldSplit& split,
                                    const LinsConfig& cfg);

}  // namespace finlit
