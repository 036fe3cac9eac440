#include "finlit/simulation.hpp"
#include "finlit/weighting.hpp"

#include <doctest.h>

using namespace finlit;

namespace {

// Z = (1,1,0,0), Y = (4,2,1,3), e = (0.8,0.4,0.5,0.2).
// HT terms: 4/0.8, 2/0.4, -1/0.5, -3/0.8 = 5, 5, -2, -3.75.
Dataset weighting_fixture() {
    Dataset ds;
    ds.covariates.resize(4, 1);
    ds.covariates << 1, 2, 3, 4;
    ds.treatment = {1, 1, 0, 0};
    ds.outcome.resize(4);
    ds.outcome << 4, 2, 1, 3;
    ds.covariate_names = {"x1"};
    return ds;
}

Eigen::VectorXd fixture_scores() {
    Eigen::VectorXd e(4);
    e << 0.8, 0.4, 0.5, 0.2;
    return e;
}

WeightingConfig plugin_config() {
    WeightingConfig cfg;
    cfg.variance_method = VarianceMethod::plugin;
    return cfg;
}

}  // namespace

TEST_CASE("HT matches the hand-computed value") {
    auto r = estimate_ht(weighting_fixture(), fixture_scores(), plugin_config());
    CHECK(r.tau_hat == doctest::Approx((5.0 + 5.0 - 2.0 - 3.75) / 4.0));  // 1.0625
    CHECK(r.method == "horvitz_thompson");
    CHECK(r.n_treated == 2);
    CHECK(r.n_control == 2);
    CHECK(r.ci_low == doctest::Approx(r.tau_hat - 1.96 * std::sqrt(r.var_hat)));
    CHECK(r.ci_high == doctest::Approx(r.tau_hat + 1.96 * std::sqrt(r.var_hat)));
}

TEST_CASE("Hajek matches the hand-computed ratio of weighted means") {
    auto r = estimate_hajek(weighting_fixture(), fixture_scores(), plugin_config());
    // treated: (5+5)/(1.25+2.5); control: (2+3.75)/(2+1.25)
    CHECK(r.tau_hat == doctest::Approx(10.0 / 3.75 - 5.75 / 3.25));
    CHECK(r.method == "hajek");
}

TEST_CASE("Hajek is location invariant, HT is not") {
    auto ds = weighting_fixture();
    auto cfg = plugin_config();
    const auto e = fixture_scores();
    const double ht0 = estimate_ht(ds, e, cfg).tau_hat;
    const double hajek0 = estimate_hajek(ds, e, cfg).tau_hat;

    ds.outcome.array() += 100.0;
    CHECK(estimate_hajek(ds, e, cfg).tau_hat == doctest::Approx(hajek0));
    CHECK(std::abs(estimate_ht(ds, e, cfg).tau_hat - ht0) > 1.0);
}

TEST_CASE("truncation clamps extreme scores before weighting") {
    auto ds = weighting_fixture();
    auto cfg = plugin_config();
    Eigen::VectorXd e(4);
    e << 0.001, 0.4, 0.5, 0.999;

    cfg.truncation.enabled = false;
    const double raw = estimate_ht(ds, e, cfg).tau_hat;

    cfg.truncation.enabled = true;
    const double truncated = estimate_ht(ds, e, cfg).tau_hat;
    CHECK(truncated != doctest::Approx(raw));

    // equal to manual clamping with truncation off
    Eigen::VectorXd clamped = truncate_propensity(e, 0.025, 0.975);
    cfg.truncation.enabled = false;
    CHECK(truncated == estimate_ht(ds, clamped, cfg).tau_hat);
}

TEST_CASE("propensity scores are validated") {
    auto ds = weighting_fixture();
    auto cfg = plugin_config();
    cfg.truncation.enabled = false;
    Eigen::VectorXd short_e(3);
    short_e << 0.5, 0.5, 0.5;
    CHECK_THROWS(estimate_ht(ds, short_e, cfg));
    Eigen::VectorXd bad = fixture_scores();
    bad[0] = 1.0;
    CHECK_THROWS(estimate_ht(ds, bad, cfg));
}

TEST_CASE("AIPW with fixed predictions matches the hand trace") {
    auto ds = weighting_fixture();
    Eigen::VectorXd mu1 = Eigen::VectorXd::Constant(4, 3.0);
    Eigen::VectorXd mu0 = Eigen::VectorXd::Constant(4, 1.0);
    auto r = estimate_aipw_with_predictions(ds, fixture_scores(), mu1, mu0, plugin_config());

    // phi = (3.25, -0.5, 2, -0.5)
    CHECK(r.tau_hat == doctest::Approx(1.0625));
    CHECK(r.var_hat == doctest::Approx(10.546875 / 16.0));
    CHECK(r.diagnostics.at("mu1_adj") == doctest::Approx(2.6875));
    CHECK(r.diagnostics.at("mu0_adj") == doctest::Approx(1.625));
    CHECK(r.diagnostics.at("mu1_adj") - r.diagnostics.at("mu0_adj") ==
          doctest::Approx(r.tau_hat));
}

TEST_CASE("AIPW with zero predictions collapses to HT") {
    auto ds = weighting_fixture();
    Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    auto cfg = plugin_config();
    auto aipw = estimate_aipw_with_predictions(ds, fixture_scores(), zero, zero, cfg);
    auto ht = estimate_ht(ds, fixture_scores(), cfg);
    CHECK(aipw.tau_hat == ht.tau_hat);  // bitwise: identical arithmetic
}

TEST_CASE("cross-fitted AIPW recovers a linear effect") {
    DGPConfig dgp;
    dgp.n = 1500;
    dgp.d = 3;
    dgp.beta = Eigen::VectorXd::Constant(3, 0.3);
    dgp.gamma = Eigen::VectorXd::Constant(3, 1.0);
    dgp.tau = 2.0;
    dgp.seed = 9;
    auto ds = generate_dgp(dgp);

    auto pm = fit_logistic(ds.covariates, ds.treatment);
    auto e_hat = predict_propensity(pm, ds.covariates);

    auto cfg = plugin_config();
    cfg.seed = 42;
    auto r = estimate_aipw(ds, e_hat, cfg);
    CHECK(r.tau_hat == doctest::Approx(2.0).epsilon(0.08));
    CHECK(r.var_hat > 0.0);
    CHECK(r.diagnostics.at("crossfit_folds") == 2);
}

TEST_CASE("AIPW is robust to a wrong propensity when the outcome model is right") {
    DGPConfig dgp;
    dgp.n = 1500;
    dgp.d = 3;
    dgp.beta = Eigen::VectorXd::Constant(3, 0.4);
    dgp.gamma = Eigen::VectorXd::Constant(3, 1.0);
    dgp.tau = 2.0;
    dgp.seed = 21;
    auto ds = generate_dgp(dgp);

    // deliberately wrong scores: a constant
    Eigen::VectorXd e_wrong = Eigen::VectorXd::Constant(ds.n(), 0.5);
    auto cfg = plugin_config();
    cfg.seed = 3;
    auto r = estimate_aipw(ds, e_wrong, cfg);
    CHECK(r.tau_hat == doctest::Approx(2.0).epsilon(0.08));
}

TEST_CASE("bootstrap variance is deterministic and reports replicate counts") {
    DGPConfig dgp;
    dgp.n = 200;
    dgp.d = 2;
    dgp.beta = Eigen::VectorXd::Constant(2, 0.2);
    dgp.gamma = Eigen::VectorXd::Constant(2, 1.0);
    dgp.seed = 5;
    auto ds = generate_dgp(dgp);
    auto pm = fit_logistic(ds.covariates, ds.treatment);
    auto e_hat = predict_propensity(pm, ds.covariates);

    WeightingConfig cfg;
    cfg.variance_method = VarianceMethod::bootstrap;
    cfg.bootstrap_replicates = 200;
    cfg.seed = 17;

    auto a = estimate_ht(ds, e_hat, cfg);
    auto b = estimate_ht(ds, e_hat, cfg);
    CHECK(a.var_hat == b.var_hat);
    CHECK(a.var_hat > 0.0);
    CHECK(a.diagnostics.at("bootstrap_effective") > 100);
    CHECK(a.diagnostics.at("bootstrap_effective") <= 200);

    cfg.seed = 18;
    auto c = estimate_ht(ds, e_hat, cfg);
    CHECK(c.var_hat != a.var_hat);
}

TEST_CASE("bootstrap rejects too few replicates") {
    auto ds = weighting_fixture();
    WeightingConfig cfg;
    cfg.bootstrap_replicates = 50;
    CHECK_THROWS(estimate_ht(ds, fixture_scores(), cfg));
}
