// Benchmarks the OpenMP kernels against their serial reference
// implementations and reports wall times plus agreement.

#include "finlit/reference_impl.hpp"
#include "finlit/simulation.hpp"

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace finlit;

namespace {

double time_ms(const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void row(const char* name, double serial_ms, double parallel_ms, bool equal) {
    std::printf("%-28s %10.1f ms %10.1f ms   x%.2f   %s\n", name, serial_ms, parallel_ms,
                parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0,
                equal ? "bitwise-equal" : "MISMATCH");
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads: %d\n\n", omp_get_max_threads());
#else
    std::printf("OpenMP not available; parallel paths run serially\n\n");
#endif
    std::printf("%-28s %13s %13s %7s\n", "kernel", "serial", "parallel", "speedup");

    DGPConfig cfg;
    cfg.n = 2500;
    cfg.d = 5;
    cfg.beta = Eigen::VectorXd::Constant(5, 0.2);
    cfg.gamma = Eigen::VectorXd::Constant(5, 1.0);
    cfg.seed = 1;
    Dataset ds = generate_dgp(cfg);

    {
        DistanceMatrix serial, parallel;
        const double ts = time_ms([&] { serial = ref::robust_mahalanobis(ds); });
        const double tp = time_ms([&] { parallel = robust_mahalanobis(ds, 0); });
        row("distance_matrix", ts, tp, serial.entries == parallel.entries);
    }

    {
        DGPConfig small = cfg;
        small.n = 400;
        Dataset dsb = generate_dgp(small);
        auto pm = fit_logistic(dsb.covariates, dsb.treatment);
        auto e_hat = predict_propensity(pm, dsb.covariates);

        WeightingConfig wcfg;
        wcfg.bootstrap_replicates = 400;
        wcfg.seed = 9;
        double serial_var = 0.0;
        EstimateResult parallel;
        const double ts = time_ms([&] { serial_var = ref::bootstrap_variance_ht(dsb, wcfg); });
        const double tp = time_ms([&] { parallel = estimate_ht(dsb, e_hat, wcfg); });
        row("bootstrap_ht", ts, tp, serial_var == parallel.var_hat);
    }

    {
        ForestConfig fc;
        fc.seed = 5;
        fc.n_trees = 100;
        std::unique_ptr<RegressionModel> serial, parallel;
        fc.n_threads = 1;
        const double ts = time_ms([&] { serial = fit_forest(ds.covariates, ds.outcome, fc); });
        fc.n_threads = 0;
        const double tp = time_ms([&] { parallel = fit_forest(ds.covariates, ds.outcome, fc); });
        bool equal = true;
        for (Eigen::Index i = 0; i < ds.n() && equal; i += 37)
            equal = serial->predict_one(ds.covariates.row(i)) ==
                    parallel->predict_one(ds.covariates.row(i));
        row("forest_fit", ts, tp, equal);
    }

    {
        DGPConfig small = cfg;
        small.n = 500;
        std::vector<EstimatorSpec> ests;
        ests.push_back({EstimatorKind::hajek});
        ests.push_back({EstimatorKind::aipw});
        ReplicationOptions opts;
        opts.weighting.variance_method = VarianceMethod::plugin;

        SimulationSummary serial, parallel;
        opts.n_threads = 1;
        const double ts =
            time_ms([&] { serial = run_replications(small, ests, 40, 3, opts); });
        opts.n_threads = 0;
        const double tp =
            time_ms([&] { parallel = run_replications(small, ests, 40, 3, opts); });
        bool equal = true;
        for (size_t e = 0; e < serial.per_estimator.size(); ++e)
            equal = equal &&
                    serial.per_estimator[e].mean_bias == parallel.per_estimator[e].mean_bias &&
                    serial.per_estimator[e].mean_var_hat == parallel.per_estimator[e].mean_var_hat;
        row("simulation_replicates", ts, tp, equal);
    }

    return 0;
}
