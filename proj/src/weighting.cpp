#include "finlit/weighting.hpp"

#include "finlit/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace finlit {

namespace {

Eigen::VectorXd effective_scores(const Eigen::VectorXd& e_hat, const WeightingConfig& cfg) {
    if (cfg.truncation.enabled)
        return truncate_propensity(e_hat, cfg.truncation.lo, cfg.truncation.hi);
    return e_hat;
}

void check_scores(const Dataset& ds, const Eigen::VectorXd& e) {
    if (e.size() != ds.n()) throw std::invalid_argument("propensity vector length != n");
    for (Eigen::Index i = 0; i < e.size(); ++i)
        if (!(e[i] > 0.0 && e[i] < 1.0))
            throw std::invalid_argument("propensity score outside (0,1)");
}

double ht_point(const std::vector<int>& Z, const Eigen::VectorXd& Y, const Eigen::VectorXd& e) {
    const Eigen::Index n = Y.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double zi = Z[static_cast<size_t>(i)];
        acc += zi * Y[i] / e[i] - (1.0 - zi) * Y[i] / (1.0 - e[i]);
    }
    return acc / static_cast<double>(n);
}

double hajek_point(const std::vector<int>& Z, const Eigen::VectorXd& Y, const Eigen::VectorXd& e) {
    double num_t = 0.0, den_t = 0.0, num_c = 0.0, den_c = 0.0;
    for (Eigen::Index i = 0; i < Y.size(); ++i) {
        const double zi = Z[static_cast<size_t>(i)];
        num_t += zi * Y[i] / e[i];
        den_t += zi / e[i];
        num_c += (1.0 - zi) * Y[i] / (1.0 - e[i]);
        den_c += (1.0 - zi) / (1.0 - e[i]);
    }
    if (den_t == 0.0 || den_c == 0.0)
        throw std::runtime_error("hajek: empty arm");
    return num_t / den_t - num_c / den_c;
}

using PointFn = double (*)(const std::vector<int>&, const Eigen::VectorXd&,
                           const Eigen::VectorXd&);

// Nonparametric bootstrap that refits the logistic propensity model on each
// resample; plug-in variance treating the scores as known over-covers.
double bootstrap_variance(const Dataset& ds, PointFn point, const WeightingConfig& cfg,
                          int* n_effective) {
    const int B = cfg.bootstrap_replicates;
    if (B < 100) throw std::invalid_argument("bootstrap needs B >= 100");
    const int n = static_cast<int>(ds.n());

    std::vector<double> vals(static_cast<size_t>(B), std::numeric_limits<double>::quiet_NaN());

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(cfg.n_threads > 0 ? cfg.n_threads : omp_get_max_threads())
#endif
    for (int b = 0; b < B; ++b) {
        auto eng = make_engine(cfg.seed, static_cast<std::uint64_t>(b) + 0x626f6f74ULL);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int attempt = 0; attempt < 32; ++attempt) {
            Eigen::MatrixXd Xb(n, ds.dim());
            std::vector<int> Zb(static_cast<size_t>(n));
            Eigen::VectorXd Yb(n);
            int n1 = 0;
            for (int i = 0; i < n; ++i) {
                const int j = pick(eng);
                Xb.row(i) = ds.covariates.row(j);
                Zb[static_cast<size_t>(i)] = ds.treatment[static_cast<size_t>(j)];
                Yb[i] = ds.outcome[j];
                n1 += Zb[static_cast<size_t>(i)];
            }
            if (n1 == 0 || n1 == n) continue;
            try {
                PropensityModel pm = fit_logistic(Xb, Zb, cfg.logistic);
                Eigen::VectorXd eb = effective_scores(predict_propensity(pm, Xb), cfg);
                vals[static_cast<size_t>(b)] = point(Zb, Yb, eb);
            } catch (const std::exception&) {
                continue;
            }
            break;
        }
    }

    double sum = 0.0;
    int m = 0;
    for (double v : vals)
        if (std::isfinite(v)) { sum += v; ++m; }
    if (m < 2) throw std::runtime_error("bootstrap: too few successful replicates");
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : vals)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    if (n_effective) *n_effective = m;
    return ss / (m - 1);
}

}  // namespace

EstimateResult estimate_ht(const Dataset& ds, const Eigen::VectorXd& e_hat,
                           const WeightingConfig& cfg) {
    Eigen::VectorXd e = effective_scores(e_hat, cfg);
    check_scores(ds, e);

    EstimateResult r;
    r.method = "horvitz_thompson";
    r.n_treated = ds.n_treated();
    r.n_control = ds.n_control();
    r.tau_hat = ht_point(ds.treatment, ds.outcome, e);

    if (cfg.variance_method == VarianceMethod::bootstrap) {
        int eff = 0;
        r.var_hat = bootstrap_variance(ds, &ht_point, cfg, &eff);
        r.diagnostics["bootstrap_effective"] = eff;
    } else {
        const Eigen::Index n = ds.n();
        double ss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double zi = ds.treatment[static_cast<size_t>(i)];
            const double psi =
                zi * ds.outcome[i] / e[i] - (1.0 - zi) * ds.outcome[i] / (1.0 - e[i]);
            ss += (psi - r.tau_hat) * (psi - r.tau_hat);
        }
        r.var_hat = ss / (static_cast<double>(n) * static_cast<double>(n));
    }
    apply_normal_ci(r);
    return r;
}

EstimateResult estimate_hajek(const Dataset& ds, const Eigen::VectorXd& e_hat,
                              const WeightingConfig& cfg) {
    Eigen::VectorXd e = effective_scores(e_hat, cfg);
    check_scores(ds, e);

    EstimateResult r;
    r.method = "hajek";
    r.n_treated = ds.n_treated();
    r.n_control = ds.n_control();
    r.tau_hat = hajek_point(ds.treatment, ds.outcome, e);

    if (cfg.variance_method == VarianceMethod::bootstrap) {
        int eff = 0;
        r.var_hat = bootstrap_variance(ds, &hajek_point, cfg, &eff);
        r.diagnostics["bootstrap_effective"] = eff;
    } else {
        // ratio-estimator influence function around the weighted arm means
        const Eigen::Index n = ds.n();
        double num_t = 0.0, den_t = 0.0, num_c = 0.0, den_c = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double zi = ds.treatment[static_cast<size_t>(i)];
            num_t += zi * ds.outcome[i] / e[i];
            den_t += zi / e[i];
            num_c += (1.0 - zi) * ds.outcome[i] / (1.0 - e[i]);
            den_c += (1.0 - zi) / (1.0 - e[i]);
        }
        const double mt = num_t / den_t, mc = num_c / den_c;
        double ss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double zi = ds.treatment[static_cast<size_t>(i)];
            const double psi = zi * (ds.outcome[i] - mt) / e[i] -
                               (1.0 - zi) * (ds.outcome[i] - mc) / (1.0 - e[i]);
            ss += psi * psi;
        }
        r.var_hat = ss / (static_cast<double>(n) * static_cast<double>(n));
    }
    apply_normal_ci(r);
    return r;
}

EstimateResult estimate_aipw_with_predictions(const Dataset& ds, const Eigen::VectorXd& e_hat,
                                              const Eigen::VectorXd& mu1,
                                              const Eigen::VectorXd& mu0,
                                              const WeightingConfig& cfg) {
    Eigen::VectorXd e = effective_scores(e_hat, cfg);
    check_scores(ds, e);
    const Eigen::Index n = ds.n();
    if (mu1.size() != n || mu0.size() != n)
        throw std::invalid_argument("aipw: prediction vector length != n");

    double adj1 = 0.0, adj0 = 0.0, acc = 0.0;
    Eigen::VectorXd phi(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double zi = ds.treatment[static_cast<size_t>(i)];
        const double t1 = zi * (ds.outcome[i] - mu1[i]) / e[i] + mu1[i];
        const double t0 = (1.0 - zi) * (ds.outcome[i] - mu0[i]) / (1.0 - e[i]) + mu0[i];
        adj1 += t1;
        adj0 += t0;
        phi[i] = t1 - t0;
        acc += phi[i];
    }
    const double dn = static_cast<double>(n);

    EstimateResult r;
    r.method = "aipw";
    r.n_treated = ds.n_treated();
    r.n_control = ds.n_control();
    r.tau_hat = acc / dn;
    r.diagnostics["mu1_adj"] = adj1 / dn;
    r.diagnostics["mu0_adj"] = adj0 / dn;

    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (phi[i] - r.tau_hat) * (phi[i] - r.tau_hat);
    r.var_hat = ss / (dn * dn);
    apply_normal_ci(r);
    return r;
}

EstimateResult estimate_aipw(const Dataset& ds, const Eigen::VectorXd& e_hat,
                             const WeightingConfig& cfg) {
    const Eigen::Index n = ds.n();
    if (cfg.crossfit_folds != 2)
        throw std::invalid_argument("aipw: only 2-fold cross-fitting is supported");

    FoldSplit split = split_random(ds, cfg.seed);
    Eigen::VectorXd mu1(n), mu0(n);

    auto fit_and_predict = [&](const std::vector<int>& train, const std::vector<int>& test) {
        std::vector<int> t_idx, c_idx;
        for (int i : train)
            (ds.treatment[static_cast<size_t>(i)] == 1 ? t_idx : c_idx).push_back(i);

        auto arm_matrix = [&](const std::vector<int>& idx) {
            Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), ds.dim());
            Eigen::VectorXd Y(static_cast<Eigen::Index>(idx.size()));
            for (size_t k = 0; k < idx.size(); ++k) {
                X.row(static_cast<Eigen::Index>(k)) = ds.covariates.row(idx[k]);
                Y[static_cast<Eigen::Index>(k)] = ds.outcome[idx[k]];
            }
            return std::pair{X, Y};
        };

        auto [X1, Y1] = arm_matrix(t_idx);
        auto [X0, Y0] = arm_matrix(c_idx);
        auto m1 = fit_regression(cfg.outcome_model_kind, X1, Y1, cfg.forest);
        auto m0 = fit_regression(cfg.outcome_model_kind, X0, Y0, cfg.forest);
        for (int i : test) {
            mu1[i] = m1->predict_one(ds.covariates.row(i));
            mu0[i] = m0->predict_one(ds.covariates.row(i));
        }
    };

    fit_and_predict(split.fold1, split.fold2);
    fit_and_predict(split.fold2, split.fold1);

    EstimateResult r = estimate_aipw_with_predictions(ds, e_hat, mu1, mu0, cfg);
    r.diagnostics["crossfit_folds"] = 2;
    return r;
}

}  // namespace finlit
