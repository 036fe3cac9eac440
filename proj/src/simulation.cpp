#include "finlit/simulation.hpp"

#include "finlit/matching.hpp"
#include "finlit/rng.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace finlit {

Misspec misspec_from_string(const std::string& s) {
    if (s == "none") return Misspec::none;
    if (s == "hide_covariate_from_propensity") return Misspec::hide_covariate_from_propensity;
    if (s == "hide_covariate_from_outcome") return Misspec::hide_covariate_from_outcome;
    if (s == "nonlinear_outcome") return Misspec::nonlinear_outcome;
    throw std::invalid_argument("unknown misspec: " + s);
}

Eigen::VectorXd true_propensity(const DGPConfig& cfg, const Eigen::MatrixXd& X) {
    Eigen::VectorXd eta = X * cfg.beta;
    return (1.0 + (-eta.array()).exp()).inverse();
}

Dataset generate_dgp(const DGPConfig& cfg) {
    if (cfg.n < 10) throw std::invalid_argument("generate_dgp: need n >= 10");
    if (cfg.noise_sd < 0.0) throw std::invalid_argument("generate_dgp: noise_sd < 0");
    if (cfg.beta.size() != cfg.d || cfg.gamma.size() != cfg.d)
        throw std::invalid_argument("generate_dgp: beta/gamma length != d");

    auto eng = make_engine(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Dataset ds;
    ds.covariates.resize(cfg.n, cfg.d);
    for (long i = 0; i < cfg.n; ++i)
        for (int j = 0; j < cfg.d; ++j) ds.covariates(i, j) = normal(eng);

    Eigen::VectorXd e = true_propensity(cfg, ds.covariates);

    ds.treatment.resize(static_cast<size_t>(cfg.n));
    ds.outcome.resize(cfg.n);
    OraclePotentials oracle;
    oracle.y0.resize(cfg.n);
    oracle.y1.resize(cfg.n);

    for (long i = 0; i < cfg.n; ++i) {
        ds.treatment[static_cast<size_t>(i)] = unif(eng) < e[i] ? 1 : 0;
        double base = cfg.alpha + ds.covariates.row(i).dot(cfg.gamma);
        if (cfg.misspec == Misspec::nonlinear_outcome)
            base += 0.5 * (ds.covariates(i, 0) * ds.covariates(i, 0) - 1.0);
        const double noise = cfg.noise_sd * normal(eng);  // shared across both arms
        oracle.y0[i] = base + noise;
        oracle.y1[i] = base + cfg.tau + noise;
        ds.outcome[i] = ds.treatment[static_cast<size_t>(i)] == 1 ? oracle.y1[i] : oracle.y0[i];
    }
    ds.oracle = std::move(oracle);

    ds.covariate_names.reserve(static_cast<size_t>(cfg.d));
    for (int j = 0; j < cfg.d; ++j) ds.covariate_names.push_back("x" + std::to_string(j + 1));
    return ds;
}

std::string EstimatorSpec::label() const {
    switch (kind) {
        case EstimatorKind::lins: return "lins_" + to_string(model_kind);
        case EstimatorKind::ht: return "ht";
        case EstimatorKind::hajek: return "hajek";
        case EstimatorKind::aipw: return "aipw";
        case EstimatorKind::matching: {
            std::ostringstream os;
            os << "matching_c" << caliper;
            return os.str();
        }
    }
    return "?";
}

namespace {

Eigen::MatrixXd drop_last_column(const Eigen::MatrixXd& X) {
    return X.leftCols(X.cols() - 1);
}

struct ReplicateOutcome {
    double tau = 0.0;
    double var = 0.0;
    bool ok = false;
};

ReplicateOutcome run_one(const Dataset& ds, const EstimatorSpec& spec,
                         const Eigen::VectorXd& e_hat, const Dataset& ds_prop,
                         const Dataset& ds_out, const WeightingConfig& wcfg,
                         std::uint64_t rep_seed) {
    ReplicateOutcome out;
    try {
        switch (spec.kind) {
            case EstimatorKind::ht: {
                auto r = estimate_ht(ds_prop, e_hat, wcfg);
                out = {r.tau_hat, r.var_hat, true};
                break;
            }
            case EstimatorKind::hajek: {
                auto r = estimate_hajek(ds_prop, e_hat, wcfg);
                out = {r.tau_hat, r.var_hat, true};
                break;
            }
            case EstimatorKind::aipw: {
                auto r = estimate_aipw(ds_out, e_hat, wcfg);
                out = {r.tau_hat, r.var_hat, true};
                break;
            }
            case EstimatorKind::lins: {
                LinsConfig lcfg;
                lcfg.model_kind = spec.model_kind;
                lcfg.seed = rep_seed;
                lcfg.forest.n_threads = 1;
                auto r = crossfit_lins(ds, lcfg);
                out = {r.estimate.tau_hat, r.estimate.var_hat, true};
                break;
            }
            case EstimatorKind::matching: {
                DistanceMatrix dm = robust_mahalanobis(ds, 1);
                DistanceMatrix filtered = caliper_filter(dm, e_hat, spec.caliper);
                MatchSet ms = optimal_match(filtered);

                std::vector<int> controls;
                for (Eigen::Index i = 0; i < ds.n(); ++i)
                    if (ds.treatment[static_cast<size_t>(i)] == 0)
                        controls.push_back(static_cast<int>(i));
                Eigen::MatrixXd Xc(static_cast<Eigen::Index>(controls.size()), ds_out.dim());
                Eigen::VectorXd Yc(static_cast<Eigen::Index>(controls.size()));
                for (size_t k = 0; k < controls.size(); ++k) {
                    Xc.row(static_cast<Eigen::Index>(k)) = ds_out.covariates.row(controls[k]);
                    Yc[static_cast<Eigen::Index>(k)] = ds.outcome[controls[k]];
                }
                auto mu0 = fit_ols(Xc, Yc);

                // bias correction must see the same covariate view mu0 trained on
                Dataset ds_bc = ds;
                ds_bc.covariates = ds_out.covariates;
                auto r = bias_correct(ms, ds_bc, *mu0);
                out = {r.tau_hat, r.var_hat, true};
                break;
            }
        }
    } catch (const std::exception&) {
        out.ok = false;
    }
    return out;
}

}  // namespace

SimulationSummary run_replications(const DGPConfig& cfg,
                                   const std::vector<EstimatorSpec>& estimators, int R,
                                   std::uint64_t seed, const ReplicationOptions& opts) {
    if (R < 2) throw std::invalid_argument("run_replications: need R >= 2");
    const auto n_est = estimators.size();

    std::vector<std::vector<ReplicateOutcome>> grid(
        n_est, std::vector<ReplicateOutcome>(static_cast<size_t>(R)));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(opts.n_threads > 0 ? opts.n_threads : omp_get_max_threads())
#endif
    for (int r = 0; r < R; ++r) {
        DGPConfig rep_cfg = cfg;
        rep_cfg.seed = mix_seed(seed, static_cast<std::uint64_t>(r));
        Dataset ds = generate_dgp(rep_cfg);

        // estimation-time misspecification: hide the last covariate from one model
        Dataset ds_prop = ds;
        Dataset ds_out = ds;
        if (cfg.misspec == Misspec::hide_covariate_from_propensity) {
            ds_prop.covariates = drop_last_column(ds.covariates);
            ds_prop.covariate_names.pop_back();
        } else if (cfg.misspec == Misspec::hide_covariate_from_outcome) {
            ds_out.covariates = drop_last_column(ds.covariates);
            ds_out.covariate_names.pop_back();
        }

        WeightingConfig wcfg = opts.weighting;
        wcfg.seed = rep_cfg.seed;
        wcfg.n_threads = 1;
        wcfg.forest.n_threads = 1;

        Eigen::VectorXd e_hat;
        bool prop_ok = true;
        try {
            PropensityModel pm = fit_logistic(ds_prop.covariates, ds.treatment, wcfg.logistic);
            e_hat = predict_propensity(pm, ds_prop.covariates);
        } catch (const std::exception&) {
            prop_ok = false;
        }

        for (size_t e = 0; e < n_est; ++e) {
            if (!prop_ok && estimators[e].kind != EstimatorKind::lins) continue;
            grid[e][static_cast<size_t>(r)] =
                run_one(ds, estimators[e], e_hat, ds_prop, ds_out, wcfg, rep_cfg.seed);
        }
    }

    SimulationSummary summary;
    summary.replications = R;
    summary.true_tau = cfg.tau;
    for (size_t e = 0; e < n_est; ++e) {
        EstimatorStats st;
        st.label = estimators[e].label();
        double sum = 0.0, sum_var = 0.0;
        int covered = 0;
        std::vector<double> taus;
        for (const auto& rep : grid[e]) {
            if (!rep.ok) { ++st.n_failed; continue; }
            ++st.n_success;
            taus.push_back(rep.tau);
            sum += rep.tau;
            sum_var += rep.var;
            const double half = 1.96 * std::sqrt(rep.var);
            if (rep.tau - half <= cfg.tau && cfg.tau <= rep.tau + half) ++covered;
        }
        if (st.n_success > 0) {
            const double mean = sum / st.n_success;
            st.mean_bias = mean - cfg.tau;
            st.mean_var_hat = sum_var / st.n_success;
            st.coverage = static_cast<double>(covered) / st.n_success;
            double ss = 0.0;
            for (double t : taus) ss += (t - mean) * (t - mean);
            st.empirical_var = st.n_success > 1 ? ss / (st.n_success - 1) : 0.0;
        }
        summary.per_estimator.push_back(std::move(st));
    }
    return summary;
}

void export_summary_csv(const SimulationSummary& summary, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write summary file: " + path);
    out << "estimator,mean_bias,empirical_var,mean_var_hat,coverage,n_success,n_failed\n";
    out.precision(12);
    for (const auto& st : summary.per_estimator)
        out << st.label << ',' << st.mean_bias << ',' << st.empirical_var << ','
            << st.mean_var_hat << ',' << st.coverage << ',' << st.n_success << ','
            << st.n_failed << '\n';
}

}  // namespace finlit
