// Acceptance gate: one check per release criterion, each printing a
// pass/fail line. Exit status is 0 only when every criterion holds.

#include "finlit/assignment.hpp"
#include "finlit/lins.hpp"
#include "finlit/matching.hpp"
#include "finlit/rng.hpp"
#include "finlit/simulation.hpp"
#include "finlit/survey_ingest.hpp"
#include "finlit/weighting.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

using namespace finlit;

namespace {

int g_failures = 0;

void report(int number, const char* name, bool ok, const std::string& detail = "") {
    std::printf("criterion %2d [%s] %s%s%s\n", number, ok ? "PASS" : "FAIL", name,
                detail.empty() ? "" : " -- ", detail.c_str());
    if (!ok) ++g_failures;
}

DGPConfig base_dgp() {
    DGPConfig cfg;
    cfg.n = 2000;
    cfg.d = 5;
    cfg.beta = Eigen::VectorXd::Constant(5, 0.2);
    cfg.gamma = Eigen::VectorXd::Constant(5, 1.0);
    cfg.tau = 2.0;
    cfg.noise_sd = 1.0;
    return cfg;
}

// Small random study with externally supplied scores, for the shift identities.
struct ShiftCase {
    Dataset ds;
    Eigen::VectorXd e;
};

ShiftCase random_shift_case(std::uint64_t seed) {
    auto eng = make_engine(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> score(0.1, 0.9);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    const int n = 60;
    ShiftCase sc;
    sc.ds.covariates.resize(n, 1);
    sc.ds.outcome.resize(n);
    sc.ds.treatment.resize(n);
    sc.e.resize(n);
    int n1 = 0;
    for (int i = 0; i < n; ++i) {
        sc.ds.covariates(i, 0) = normal(eng);
        sc.e[i] = score(eng);
        sc.ds.treatment[static_cast<size_t>(i)] = unif(eng) < sc.e[i] ? 1 : 0;
        sc.ds.outcome[i] = normal(eng) * 3.0;
        n1 += sc.ds.treatment[static_cast<size_t>(i)];
    }
    if (n1 == 0) sc.ds.treatment[0] = 1;
    if (n1 == n) sc.ds.treatment[0] = 0;
    sc.ds.covariate_names = {"x1"};
    return sc;
}

WeightingConfig raw_plugin() {
    WeightingConfig cfg;
    cfg.variance_method = VarianceMethod::plugin;
    cfg.truncation.enabled = false;
    return cfg;
}

void criterion_1_oracle_recovery() {
    std::vector<EstimatorSpec> ests;
    EstimatorSpec lins;
    lins.kind = EstimatorKind::lins;
    ests.push_back(lins);
    ests.push_back({EstimatorKind::ht});
    ests.push_back({EstimatorKind::hajek});
    ests.push_back({EstimatorKind::aipw});
    EstimatorSpec matching;
    matching.kind = EstimatorKind::matching;
    matching.caliper = 0.1;
    ests.push_back(matching);

    ReplicationOptions opts;
    opts.weighting.variance_method = VarianceMethod::bootstrap;
    opts.weighting.bootstrap_replicates = 200;

    auto summary = run_replications(base_dgp(), ests, 200, 20240901, opts);
    bool ok = true;
    std::ostringstream detail;
    for (const auto& st : summary.per_estimator) {
        const bool good = std::abs(st.mean_bias) < 0.1 && st.coverage >= 0.90 &&
                          st.coverage <= 0.98 && st.n_failed == 0;
        ok = ok && good;
        detail << st.label << " bias=" << st.mean_bias << " cov=" << st.coverage << "; ";
    }
    report(1, "oracle recovery (bias < 0.1, coverage in [0.90, 0.98])", ok, detail.str());
}

void criterion_2_hajek_invariance() {
    const double shifts[] = {-100.0, 1.0, 3.7};
    double worst = 0.0;
    auto cfg = raw_plugin();
    for (int s = 0; s < 100; ++s) {
        auto sc = random_shift_case(1000 + static_cast<std::uint64_t>(s));
        const double base = estimate_hajek(sc.ds, sc.e, cfg).tau_hat;
        for (double c : shifts) {
            Dataset shifted = sc.ds;
            shifted.outcome.array() += c;
            worst = std::max(worst,
                             std::abs(estimate_hajek(shifted, sc.e, cfg).tau_hat - base));
        }
    }
    std::ostringstream detail;
    detail << "max |shift effect| = " << worst;
    report(2, "Hajek location invariance under c in {-100, 1, 3.7}", worst < 1e-9,
           detail.str());
}

void criterion_3_ht_shift_identity() {
    const double shifts[] = {-100.0, 1.0, 3.7};
    double worst = 0.0;
    auto cfg = raw_plugin();
    for (int s = 0; s < 100; ++s) {
        auto sc = random_shift_case(2000 + static_cast<std::uint64_t>(s));
        const double base = estimate_ht(sc.ds, sc.e, cfg).tau_hat;
        const auto n = static_cast<double>(sc.ds.n());
        for (double c : shifts) {
            Dataset shifted = sc.ds;
            shifted.outcome.array() += c;
            const double delta = estimate_ht(shifted, sc.e, cfg).tau_hat - base;
            double closed = 0.0;
            for (Eigen::Index i = 0; i < sc.ds.n(); ++i) {
                const double zi = sc.ds.treatment[static_cast<size_t>(i)];
                closed += c * (zi - sc.e[i]) / (sc.e[i] * (1.0 - sc.e[i]));
            }
            worst = std::max(worst, std::abs(delta - closed / n));
        }
    }
    std::ostringstream detail;
    detail << "max |delta - closed form| = " << worst;
    report(3, "HT shift identity matches the closed form", worst < 1e-9, detail.str());
}

void criterion_4_aipw_collapse() {
    auto cfg = base_dgp();
    cfg.seed = 4;
    auto ds = generate_dgp(cfg);
    Eigen::VectorXd e = true_propensity(cfg, ds.covariates);

    auto wcfg = raw_plugin();
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(ds.n());
    const bool collapses =
        estimate_aipw_with_predictions(ds, e, zero, zero, wcfg).tau_hat ==
        estimate_ht(ds, e, wcfg).tau_hat;

    // oracle outcome models: residuals vanish, leaving the plain oracle mean
    auto oracle = estimate_aipw_with_predictions(ds, e, ds.oracle->y1, ds.oracle->y0, wcfg);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) acc += ds.oracle->y1[i] - ds.oracle->y0[i];
    const bool exact = oracle.tau_hat == acc / static_cast<double>(ds.n());

    report(4, "AIPW collapses to HT with zero stubs and to the oracle mean with oracle models",
           collapses && exact);
}

void criterion_5_lins_hand_trace() {
    Dataset ds;
    ds.covariates.resize(4, 1);
    ds.covariates << 1, 2, 3, 4;
    ds.treatment = {1, 0, 1, 0};
    ds.outcome.resize(4);
    ds.outcome << 4, 2, 6, 0;
    ds.covariate_names = {"x1"};
    FoldSplit split;
    split.fold1 = {0, 1};
    split.fold2 = {2, 3};
    LinsConfig cfg;
    cfg.model_kind = ModelKind::constant_stub;

    auto res = crossfit_lins_with_split(ds, split, cfg);
    const bool ok =
        res.fold1.tau == 2.0 && res.fold2.tau == 6.0 && res.estimate.tau_hat == 4.0;
    std::ostringstream detail;
    detail << "tau_I1=" << res.fold1.tau << " tau_I2=" << res.fold2.tau
           << " tau=" << res.estimate.tau_hat;
    report(5, "Algorithm 1 four-unit hand trace is exact", ok, detail.str());
}

void criterion_6_matching_optimality() {
    auto eng = make_engine(6);
    std::uniform_int_distribution<int> size(2, 8);
    std::uniform_real_distribution<double> cost(0.0, 10.0);

    bool ok = true;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
        const int k = size(eng);
        Eigen::MatrixXd m(k, k);
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) m(i, j) = cost(eng);

        auto assign = min_cost_assignment(m);
        double got = 0.0;
        for (int i = 0; i < k; ++i) {
            if (assign[static_cast<size_t>(i)] < 0) { ok = false; break; }
            got += m(i, assign[static_cast<size_t>(i)]);
        }

        std::vector<int> perm(static_cast<size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do {
            double total = 0.0;
            for (int i = 0; i < k; ++i) total += m(i, perm[static_cast<size_t>(i)]);
            best = std::min(best, total);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ok = ok && std::abs(got - best) < 1e-9;
    }

    // caliper feasibility of emitted pairs on random confounded studies
    for (int trial = 0; trial < 20 && ok; ++trial) {
        auto cfg = base_dgp();
        cfg.n = 200;
        cfg.seed = 600 + static_cast<std::uint64_t>(trial);
        auto ds = generate_dgp(cfg);
        auto pm = fit_logistic(ds.covariates, ds.treatment);
        auto e_hat = predict_propensity(pm, ds.covariates);
        const double mean = e_hat.mean();
        const double sd = std::sqrt((e_hat.array() - mean).square().sum() /
                                    static_cast<double>(e_hat.size() - 1));
        auto ms = optimal_match(caliper_filter(robust_mahalanobis(ds), e_hat, 0.1));
        for (const auto& [t, c] : ms.pairs)
            ok = ok && std::abs(e_hat[t] - e_hat[c]) <= 0.1 * sd + 1e-12;
    }

    Eigen::MatrixXd small(2, 2);
    small << 0, 1, 1, 10;
    auto assign = min_cost_assignment(small);
    const double total = small(0, assign[0]) + small(1, assign[1]);
    ok = ok && total == 2.0;

    report(6, "matching: optimal totals, caliper feasibility, [[0,1],[1,10]] -> 2", ok);
}

void criterion_7_double_robustness() {
    ReplicationOptions opts;
    opts.weighting.variance_method = VarianceMethod::plugin;

    DGPConfig cfg = base_dgp();
    cfg.beta << 0.2, 0.2, 0.2, 0.2, 1.0;
    cfg.gamma << 1.0, 1.0, 1.0, 1.0, 2.0;

    std::vector<EstimatorSpec> aipw_only = {{EstimatorKind::aipw}};
    std::vector<EstimatorSpec> ht_only = {{EstimatorKind::ht}};

    cfg.misspec = Misspec::hide_covariate_from_outcome;
    const double aipw_bad_outcome =
        run_replications(cfg, aipw_only, 200, 7001, opts).per_estimator[0].mean_bias;

    cfg.misspec = Misspec::hide_covariate_from_propensity;
    const double aipw_bad_prop =
        run_replications(cfg, aipw_only, 200, 7002, opts).per_estimator[0].mean_bias;
    const double ht_bad_prop =
        run_replications(cfg, ht_only, 200, 7003, opts).per_estimator[0].mean_bias;

    const bool ok = std::abs(aipw_bad_outcome) < 0.05 && std::abs(aipw_bad_prop) < 0.05 &&
                    std::abs(ht_bad_prop) > 0.1;
    std::ostringstream detail;
    detail << "AIPW bias: " << aipw_bad_outcome << " / " << aipw_bad_prop
           << "; HT bias: " << ht_bad_prop;
    report(7, "double robustness of AIPW vs misspecified HT", ok, detail.str());
}

void criterion_8_balance_improvement() {
    int improved = 0;
    DGPConfig cfg = base_dgp();
    cfg.n = 600;
    cfg.beta = Eigen::VectorXd::Constant(5, 0.5);

    for (int s = 0; s < 100; ++s) {
        cfg.seed = 8000 + static_cast<std::uint64_t>(s);
        auto ds = generate_dgp(cfg);
        auto pm = fit_logistic(ds.covariates, ds.treatment);
        auto e_hat = predict_propensity(pm, ds.covariates);
        auto ms = optimal_match(caliper_filter(robust_mahalanobis(ds), e_hat, 0.1));
        if (ms.pairs.empty()) continue;
        auto rep = balance_table(ds, &ms, e_hat);
        if (rep.post.cwiseAbs().maxCoeff() < rep.pre.cwiseAbs().maxCoeff()) ++improved;
    }
    std::ostringstream detail;
    detail << improved << "/100 seeds improved";
    report(8, "post-match balance beats pre-match in >= 95% of seeds", improved >= 95,
           detail.str());
}

void criterion_9_ingestion_exactness() {
    MarkerSpec asc;
    asc.column = "m";
    asc.raw_min = 1;
    asc.raw_max = 4;
    MarkerSpec desc = asc;
    desc.orientation = Orientation::descending_good;

    bool ok = rescale_marker(98, asc) == 4.5 && rescale_marker(99, asc) == 4.5 &&
              rescale_marker(1, asc) == 0.0 && rescale_marker(4, asc) == 9.0 &&
              rescale_marker(1, desc) == 9.0 && rescale_marker(4, desc) == 0.0;

    Eigen::VectorXd nines = Eigen::VectorXd::Constant(kMarkerCount, 9.0);
    ok = ok && composite_health_score(nines, unit_profile()) == 153.0;
    ok = ok && composite_health_score(nines, scaled_profile()) == 126.0;
    ok = ok && scaled_profile().weights.sum() == 14.0;
    report(9, "ingestion exactness: 4.5 imputation, endpoints, 153/126 composites", ok);
}

void criterion_10_appendix_identities() {
    DGPConfig cfg = base_dgp();
    cfg.n = 20000;
    cfg.seed = 10;
    auto ds = generate_dgp(cfg);
    Eigen::VectorXd e = true_propensity(cfg, ds.covariates);

    // balancing within true-propensity deciles
    std::vector<int> order(static_cast<size_t>(ds.n()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return e[a] < e[b]; });

    double smd_sum = 0.0;
    int smd_count = 0;
    const long bin = ds.n() / 10;
    for (int b = 0; b < 10; ++b) {
        const long lo = b * bin;
        const long hi = b == 9 ? ds.n() : lo + bin;
        for (Eigen::Index j = 0; j < ds.dim(); ++j) {
            double st = 0, sc = 0, sst = 0, ssc = 0;
            long nt = 0, nc = 0;
            for (long k = lo; k < hi; ++k) {
                const int i = order[static_cast<size_t>(k)];
                const double v = ds.covariates(i, j);
                if (ds.treatment[static_cast<size_t>(i)] == 1) { st += v; sst += v * v; ++nt; }
                else { sc += v; ssc += v * v; ++nc; }
            }
            if (nt < 2 || nc < 2) continue;
            const double mt = st / nt, mc = sc / nc;
            const double vt = (sst - nt * mt * mt) / (nt - 1);
            const double vc = (ssc - nc * mc * mc) / (nc - 1);
            const double pooled = std::sqrt(0.5 * (vt + vc));
            if (pooled > 0) { smd_sum += std::abs(mt - mc) / pooled; ++smd_count; }
        }
    }
    const double mean_smd = smd_sum / smd_count;

    // E[Z Y / e(X)] = E[Y(1)] with true scores
    double sum_w = 0.0, ss_w = 0.0, sum_y1 = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        const double zi = ds.treatment[static_cast<size_t>(i)];
        const double w = zi * ds.outcome[i] / e[i];
        sum_w += w;
        ss_w += w * w;
        sum_y1 += ds.oracle->y1[i];
    }
    const double n = static_cast<double>(ds.n());
    const double m_w = sum_w / n;
    const double se = std::sqrt((ss_w / n - m_w * m_w) / n);
    const double gap = std::abs(m_w - sum_y1 / n);

    const bool ok = mean_smd < 0.1 && gap <= 3.0 * se;
    std::ostringstream detail;
    detail << "mean within-decile SMD = " << mean_smd << "; IPW gap = " << gap
           << " (3 SE = " << 3.0 * se << ")";
    report(10, "propensity balancing and IPW mean identity at n=20000", ok, detail.str());
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void criterion_11_cli_determinism() {
    const char* cli = std::getenv("FINLIT_CLI");
    if (cli == nullptr) {
        report(11, "CLI determinism (FINLIT_CLI not set)", false);
        return;
    }

    DGPConfig cfg = base_dgp();
    cfg.n = 400;
    cfg.seed = 11;
    save_dataset_csv(generate_dgp(cfg), "accept_data.csv");

    {
        std::ofstream out("accept_estimate.json");
        out << R"({"dataset": "accept_data.csv", "seed": 17,
                   "bootstrap_replicates": 200, "output_prefix": "accept_est"})";
    }
    {
        std::ofstream out("accept_simulate.json");
        out << R"({"n": 300, "d": 3, "beta": 0.3, "gamma": 1.0, "tau": 2.0,
                   "replications": 10, "seed": 19, "variance_method": "plugin",
                   "estimators": [{"kind": "hajek"}, {"kind": "lins"}],
                   "output": "accept_sim.csv"})";
    }

    auto run = [&](const std::string& args) {
        const std::string cmd = std::string("\"") + cli + "\" " + args + " > /dev/null";
        return std::system(cmd.c_str()) == 0;
    };

    bool ok = run("estimate --config accept_estimate.json");
    const std::string est1_csv = slurp("accept_est.csv");
    const std::string est1_txt = slurp("accept_est.txt");
    ok = ok && run("estimate --config accept_estimate.json");
    ok = ok && est1_csv == slurp("accept_est.csv") && est1_txt == slurp("accept_est.txt");
    ok = ok && !est1_csv.empty();

    ok = ok && run("simulate --config accept_simulate.json");
    const std::string sim1 = slurp("accept_sim.csv");
    ok = ok && run("simulate --config accept_simulate.json");
    ok = ok && sim1 == slurp("accept_sim.csv") && !sim1.empty();

    report(11, "byte-identical estimate and simulate reruns", ok);
}

}  // namespace

int main() {
    criterion_1_oracle_recovery();
    criterion_2_hajek_invariance();
    criterion_3_ht_shift_identity();
    criterion_4_aipw_collapse();
    criterion_5_lins_hand_trace();
    criterion_6_matching_optimality();
    criterion_7_double_robustness();
    criterion_8_balance_improvement();
    criterion_9_ingestion_exactness();
    criterion_10_appendix_identities();
    criterion_11_cli_determinism();

    if (g_failures > 0) {
        std::printf("%d criterion(s) failed\n", g_failures);
        return 1;
    }
    std::printf("all 11 criteria passed\n");
    return 0;
}
