#include "finlit/lins.hpp"

#include "finlit/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace finlit {

DebiasedModel debias_model(std::shared_ptr<const RegressionModel> model,
                           const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                           const std::vector<int>& Z, Arm arm) {
    const int want = arm == Arm::treated ? 1 : 0;
    double resid_sum = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (Z[static_cast<size_t>(i)] != want) continue;
        resid_sum += Y[i] - model->predict_one(X.row(i));
        ++count;
    }
    if (count == 0) throw std::runtime_error("debias_model: arm empty in shift data");
    return DebiasedModel{std::move(model), resid_sum / static_cast<double>(count), arm};
}

namespace {

struct FoldData {
    Eigen::MatrixXd X;
    Eigen::VectorXd Y;
    std::vector<int> Z;
    long n1 = 0, n0 = 0;
};

FoldData gather(const Dataset& ds, const std::vector<int>& idx) {
    FoldData f;
    const auto m = static_cast<Eigen::Index>(idx.size());
    f.X.resize(m, ds.dim());
    f.Y.resize(m);
    f.Z.resize(idx.size());
    for (Eigen::Index k = 0; k < m; ++k) {
        const int i = idx[static_cast<size_t>(k)];
        f.X.row(k) = ds.covariates.row(i);
        f.Y[k] = ds.outcome[i];
        f.Z[static_cast<size_t>(k)] = ds.treatment[static_cast<size_t>(i)];
        (f.Z[static_cast<size_t>(k)] == 1 ? f.n1 : f.n0)++;
    }
    return f;
}

std::unique_ptr<RegressionModel> fit_arm(const FoldData& f, int arm_value,
                                         const LinsConfig& cfg, std::uint64_t seed_index) {
    std::vector<Eigen::Index> rows;
    for (Eigen::Index i = 0; i < f.X.rows(); ++i)
        if (f.Z[static_cast<size_t>(i)] == arm_value) rows.push_back(i);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()), f.X.cols());
    Eigen::VectorXd Y(static_cast<Eigen::Index>(rows.size()));
    for (size_t k = 0; k < rows.size(); ++k) {
        X.row(static_cast<Eigen::Index>(k)) = f.X.row(rows[k]);
        Y[static_cast<Eigen::Index>(k)] = f.Y[rows[k]];
    }
    ForestConfig fc = cfg.forest;
    fc.seed = mix_seed(cfg.seed, seed_index);
    return fit_regression(cfg.model_kind, X, Y, fc);
}

LinsFoldStats fold_estimate(const FoldData& f, const DebiasedModel& mu1,
                            const DebiasedModel& mu0) {
    LinsFoldStats s;
    s.n = f.X.rows();
    s.n_treated = f.n1;
    s.n_control = f.n0;

    const auto nk = static_cast<double>(s.n);
    Eigen::VectorXd m1(s.n), m0(s.n);
    double sum_plus = 0.0, sum_minus = 0.0;
    for (Eigen::Index i = 0; i < s.n; ++i) {
        m1[i] = mu1.predict_one(f.X.row(i));
        m0[i] = mu0.predict_one(f.X.row(i));
        const double zi = f.Z[static_cast<size_t>(i)];
        sum_plus += zi * f.Y[i] + (1.0 - zi) * m1[i];
        sum_minus += (1.0 - zi) * f.Y[i] + zi * m0[i];
    }
    s.tau = (sum_plus - sum_minus) / nk;

    // variance components; folds with a single-unit arm report 0 for that term
    double ss1 = 0.0, ss0 = 0.0;
    for (Eigen::Index i = 0; i < s.n; ++i) {
        const double zi = f.Z[static_cast<size_t>(i)];
        ss1 += zi * (f.Y[i] - m1[i]) * (f.Y[i] - m1[i]);
        ss0 += (1.0 - zi) * (f.Y[i] - m0[i]) * (f.Y[i] - m0[i]);
    }
    s.sigma2_1 = s.n_treated > 1 ? ss1 / static_cast<double>(s.n_treated - 1) : 0.0;
    s.sigma2_0 = s.n_control > 1 ? ss0 / static_cast<double>(s.n_control - 1) : 0.0;

    const double mean_diff = (m1 - m0).mean();
    double sst = 0.0;
    for (Eigen::Index i = 0; i < s.n; ++i) {
        const double dd = m1[i] - m0[i] - mean_diff;
        sst += dd * dd;
    }
    s.sigma2_tau = s.n > 1 ? sst / static_cast<double>(s.n - 1) : 0.0;

    s.var = s.sigma2_1 / static_cast<double>(s.n_treated) + s.sigma2_0 / static_cast<double>(s.n_control) +
            s.sigma2_tau / nk;
    return s;
}

double max_normalized_mean_diff(const Dataset& ds) {
    const Eigen::Index d = ds.dim();
    double worst = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        double st = 0.0, sc = 0.0, sst = 0.0, ssc = 0.0;
        long nt = 0, nc = 0;
        for (Eigen::Index i = 0; i < ds.n(); ++i) {
            const double v = ds.covariates(i, j);
            if (ds.treatment[static_cast<size_t>(i)] == 1) { st += v; sst += v * v; ++nt; }
            else { sc += v; ssc += v * v; ++nc; }
        }
        const double mt = st / nt, mc = sc / nc;
        const double vt = nt > 1 ? (sst - nt * mt * mt) / (nt - 1) : 0.0;
        const double vc = nc > 1 ? (ssc - nc * mc * mc) / (nc - 1) : 0.0;
        const double pooled = std::sqrt(0.5 * (vt + vc));
        if (pooled > 0.0) worst = std::max(worst, std::abs(mt - mc) / pooled);
    }
    return worst;
}

}  // namespace

LinsResult crossfit_lins_with_split(const Dataset& ds, const FoldSplit& split,
                                    const LinsConfig& cfg) {
    FoldData f1 = gather(ds, split.fold1);
    FoldData f2 = gather(ds, split.fold2);
    if (f1.n1 == 0 || f1.n0 == 0 || f2.n1 == 0 || f2.n0 == 0)
        throw std::runtime_error("crossfit_lins: a fold lacks one arm");

    // model trained on fold k, shifted on the opposite fold
    std::shared_ptr<const RegressionModel> mu1_f1 = fit_arm(f1, 1, cfg, 11);
    std::shared_ptr<const RegressionModel> mu0_f1 = fit_arm(f1, 0, cfg, 12);
    std::shared_ptr<const RegressionModel> mu1_f2 = fit_arm(f2, 1, cfg, 21);
    std::shared_ptr<const RegressionModel> mu0_f2 = fit_arm(f2, 0, cfg, 22);

    DebiasedModel t1 = debias_model(mu1_f1, f2.X, f2.Y, f2.Z, Arm::treated);
    DebiasedModel c1 = debias_model(mu0_f1, f2.X, f2.Y, f2.Z, Arm::control);
    DebiasedModel t2 = debias_model(mu1_f2, f1.X, f1.Y, f1.Z, Arm::treated);
    DebiasedModel c2 = debias_model(mu0_f2, f1.X, f1.Y, f1.Z, Arm::control);

    // fold k is evaluated with the opposite fold's debiased models
    LinsResult res;
    res.fold1 = fold_estimate(f1, t2, c2);
    res.fold2 = fold_estimate(f2, t1, c1);

    const double n = static_cast<double>(ds.n());
    const double w1 = static_cast<double>(res.fold1.n) / n;
    const double w2 = static_cast<double>(res.fold2.n) / n;

    EstimateResult& e = res.estimate;
    e.method = "generalized_lins_" + to_string(cfg.model_kind);
    e.n_treated = ds.n_treated();
    e.n_control = ds.n_control();
    e.tau_hat = w1 * res.fold1.tau + w2 * res.fold2.tau;
    e.var_hat = w1 * w1 * res.fold1.var + w2 * w2 * res.fold2.var;
    apply_normal_ci(e);

    e.diagnostics["tau_fold1"] = res.fold1.tau;
    e.diagnostics["tau_fold2"] = res.fold2.tau;
    e.diagnostics["var_fold1"] = res.fold1.var;
    e.diagnostics["var_fold2"] = res.fold2.var;
    e.diagnostics["sigma2_1"] = w1 * res.fold1.sigma2_1 + w2 * res.fold2.sigma2_1;
    e.diagnostics["sigma2_0"] = w1 * res.fold1.sigma2_0 + w2 * res.fold2.sigma2_0;
    e.diagnostics["sigma2_tau"] = w1 * res.fold1.sigma2_tau + w2 * res.fold2.sigma2_tau;
    e.diagnostics["degenerate_fold_arm"] =
        (res.fold1.n_treated < 2 || res.fold1.n_control < 2 || res.fold2.n_treated < 2 || res.fold2.n_control < 2) ? 1.0
                                                                                       : 0.0;
    const double imbalance = max_normalized_mean_diff(ds);
    e.diagnostics["max_covariate_imbalance"] = imbalance;
    e.diagnostics["imbalance_flag"] = imbalance > cfg.imbalance_warn ? 1.0 : 0.0;
    return res;
}

LinsResult crossfit_lins(const Dataset& ds, const LinsConfig& cfg) {
    FoldSplit split = split_random(ds, cfg.seed, 2);
    return crossfit_lins_with_split(ds, split, cfg);
}

}  // namespace finlit
