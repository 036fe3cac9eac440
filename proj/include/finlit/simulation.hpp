#pragma once

#include "finlit/dataset.hpp"
#include "finlit/lins.hpp"
#include "finlit/weighting.hpp"

#include <string>
#include <vector>

namespace finlit {

enum class Misspec {
    none,
    hide_covariate_from_propensity,  // estimation-time: propensity model drops the last covariate
    hide_covariate_from_outcome,     // estimation-time: outcome models drop the last covariate
    nonlinear_outcome,               // DGP gains a quadratic term in the first covariate
};

Misspec misspec_from_string(const std::string& s);

struct DGPConfig {
    long n = 2000;
    int d = 5;
    Eigen::VectorXd beta;   // propensity coefficients, length d
    Eigen::VectorXd gamma;  // outcome coefficients, length d
    double alpha = 0.0;
    double tau = 2.0;       // true ATE
    double noise_sd = 1.0;
    Misspec misspec = Misspec::none;
    std::uint64_t seed = 0;
};

// X ~ N(0,1), e = logistic(X*beta), Z ~ Bernoulli(e), Y(z) = alpha + X*gamma
// + tau*z + shared noise. The oracle potential outcomes are stored, so
// ignorability holds by construction and tau is exact per unit.
Dataset generate_dgp(const DGPConfig& cfg);

// True propensity under the config (the estimand-side quantity, not a fit).
Eigen::VectorXd true_propensity(const DGPConfig& cfg, const Eigen::MatrixXd& X);

enum class EstimatorKind { lins, ht, hajek, aipw, matching };

struct EstimatorSpec {
    EstimatorKind kind = EstimatorKind::ht;
    double caliper = 0.1;                    // matching only
    ModelKind model_kind = ModelKind::ols;   // lins / aipw nuisance
    std::string label() const;
};

struct EstimatorStats {
    std::string label;
    double mean_bias = 0.0;
    double empirical_var = 0.0;
    double mean_var_hat = 0.0;
    double coverage = 0.0;  // fraction of replicates whose 95% CI holds tau
    int n_success = 0;
    int n_failed = 0;
};

struct SimulationSummary {
    std::vector<EstimatorStats> per_estimator;
    int replications = 0;
    double true_tau = 0.0;
};

struct ReplicationOptions {
    WeightingConfig weighting;  // seed is replaced per replicate
    int n_threads = 0;          // across replicates; estimators run serial inside
};

// R independent datasets with replicate-indexed seeds; every listed
// estimator runs on each. Per-replicate estimator failures are recorded,
// not fatal. Deterministic for a fixed seed and any thread count.
SimulationSummary run_replications(const DGPConfig& cfg,
                                   const std::vector<EstimatorSpec>& estimators, int R,
                                   std::uint64_t seed, const ReplicationOptions& opts = {});

void export_summary_csv(const SimulationSummary& summary, const std::string& path);

}  // namespace finlit
