// finlit: batch front-end for the ATE estimator toolkit.
//
// Subcommands (each takes --config <json file>):
//   estimate     run the estimator battery on a dataset CSV
//   sensitivity  estimator battery per weight profile on survey-level input
//   simulate     Monte Carlo replications of the synthetic DGP
//   ingest       survey CSV + ingest spec -> dataset CSV
//   balance      pre/post-matching covariate balance table

#include "finlit/lins.hpp"
#include "finlit/matching.hpp"
#include "finlit/report.hpp"
#include "finlit/simulation.hpp"
#include "finlit/survey_ingest.hpp"
#include "finlit/weighting.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

using nlohmann::json;
using namespace finlit;

namespace {

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    return json::parse(in);
}

Eigen::VectorXd coef_vector(const json& j, int d, const char* name) {
    Eigen::VectorXd v(d);
    if (j.is_number()) {
        v.setConstant(j.get<double>());
    } else {
        if (static_cast<int>(j.size()) != d)
            throw std::runtime_error(std::string(name) + " length != d");
        for (int i = 0; i < d; ++i) v[i] = j[static_cast<size_t>(i)].get<double>();
    }
    return v;
}

WeightingConfig weighting_from(const json& cfg, std::uint64_t seed) {
    WeightingConfig w;
    w.seed = seed;
    if (cfg.contains("variance_method")) {
        const std::string m = cfg["variance_method"].get<std::string>();
        if (m == "bootstrap") w.variance_method = VarianceMethod::bootstrap;
        else if (m == "plugin") w.variance_method = VarianceMethod::plugin;
        else throw std::runtime_error("unknown variance_method: " + m);
    }
    w.bootstrap_replicates = cfg.value("bootstrap_replicates", 1000);
    if (cfg.contains("truncation")) {
        const auto& t = cfg["truncation"];
        w.truncation.enabled = t.value("enabled", true);
        w.truncation.lo = t.value("lo", 0.025);
        w.truncation.hi = t.value("hi", 0.975);
    }
    if (cfg.contains("aipw_model"))
        w.outcome_model_kind = model_kind_from_string(cfg["aipw_model"].get<std::string>());
    return w;
}

std::vector<double> caliper_grid(const json& cfg) {
    std::vector<double> calipers = {0.05, 0.1, 0.2};
    if (cfg.contains("calipers")) {
        calipers.clear();
        for (const auto& c : cfg["calipers"]) calipers.push_back(c.get<double>());
    }
    for (double c : calipers)
        if (c <= 0.0) throw std::runtime_error("calipers must be positive");
    return calipers;
}

std::string caliper_label(double c) {
    std::ostringstream os;
    os << "matching_c" << c;
    return os.str();
}

// One row per enabled estimator in fixed order: Lin's, HT, Hajek, AIPW,
// then one matching row per caliper. Estimator failures become error rows.
Report run_battery(const Dataset& ds, const json& cfg, std::uint64_t seed) {
    const auto rep = validate_dataset(ds);
    if (!rep.ok) {
        std::string msg = "dataset invalid:";
        for (const auto& v : rep.violations) msg += " " + v + ";";
        throw std::runtime_error(msg);
    }

    auto enabled = [&](const char* name) {
        return !cfg.contains("estimators") || cfg["estimators"].value(name, false);
    };
    const auto calipers = caliper_grid(cfg);
    const ModelKind lins_model = model_kind_from_string(
        cfg.value("lins_model", std::string("ols")));
    WeightingConfig wcfg = weighting_from(cfg, seed);

    Report report;
    bool any = false;

    auto add_row = [&](const std::string& label, auto&& fn) {
        any = true;
        ReportRow row;
        row.estimator = label;
        try {
            row.result = fn();
            row.ok = true;
        } catch (const std::exception& ex) {
            row.error = ex.what();
        }
        report.rows.push_back(std::move(row));
    };

    // the propensity fit is shared by every score-based estimator
    Eigen::VectorXd e_hat;
    std::string prop_error;
    try {
        PropensityModel pm = fit_logistic(ds.covariates, ds.treatment, wcfg.logistic);
        e_hat = predict_propensity(pm, ds.covariates);
    } catch (const std::exception& ex) {
        prop_error = std::string("propensity fit failed: ") + ex.what();
    }
    auto need_scores = [&]() {
        if (!prop_error.empty()) throw std::runtime_error(prop_error);
    };

    if (enabled("lins"))
        add_row("lins_" + to_string(lins_model), [&] {
            LinsConfig lcfg;
            lcfg.model_kind = lins_model;
            lcfg.seed = seed;
            return crossfit_lins(ds, lcfg).estimate;
        });
    if (enabled("ht"))
        add_row("ht", [&] {
            need_scores();
            return estimate_ht(ds, e_hat, wcfg);
        });
    if (enabled("hajek"))
        add_row("hajek", [&] {
            need_scores();
            return estimate_hajek(ds, e_hat, wcfg);
        });
    if (enabled("aipw"))
        add_row("aipw", [&] {
            need_scores();
            return estimate_aipw(ds, e_hat, wcfg);
        });
    if (enabled("matching")) {
        for (double c : calipers)
            add_row(caliper_label(c), [&] {
                need_scores();
                DistanceMatrix dm = robust_mahalanobis(ds);
                MatchSet ms = optimal_match(caliper_filter(dm, e_hat, c));

                std::vector<int> controls;
                for (Eigen::Index i = 0; i < ds.n(); ++i)
                    if (ds.treatment[static_cast<size_t>(i)] == 0)
                        controls.push_back(static_cast<int>(i));
                Eigen::MatrixXd Xc(static_cast<Eigen::Index>(controls.size()), ds.dim());
                Eigen::VectorXd Yc(static_cast<Eigen::Index>(controls.size()));
                for (size_t k = 0; k < controls.size(); ++k) {
                    Xc.row(static_cast<Eigen::Index>(k)) = ds.covariates.row(controls[k]);
                    Yc[static_cast<Eigen::Index>(k)] = ds.outcome[controls[k]];
                }
                auto mu0 = fit_ols(Xc, Yc);
                return bias_correct(ms, ds, *mu0);
            });
    }

    if (!any) throw std::runtime_error("no estimator enabled");
    return report;
}

Dataset load_configured_dataset(const json& cfg) {
    return load_dataset_csv(cfg.at("dataset").get<std::string>(),
                            cfg.value("treatment_column", std::string("Z")),
                            cfg.value("outcome_column", std::string("Y")));
}

void write_report(const Report& report, const std::string& prefix) {
    write_text_file(prefix + ".csv", report_to_csv(report));
    write_text_file(prefix + ".txt", report_to_text(report));
}

int cmd_estimate(const std::string& config_path) {
    json cfg = load_config(config_path);
    Dataset ds = load_configured_dataset(cfg);
    const auto seed = cfg.value("seed", std::uint64_t{0});

    Report report = run_battery(ds, cfg, seed);
    report.title = "ATE estimates (n=" + std::to_string(ds.n()) + ")";

    const std::string prefix = cfg.value("output_prefix", std::string("estimate"));
    write_report(report, prefix);
    std::cout << report_to_text(report);
    return 0;
}

int cmd_sensitivity(const std::string& config_path) {
    json cfg = load_config(config_path);
    const auto seed = cfg.value("seed", std::uint64_t{0});

    Table raw = load_table_csv(cfg.at("survey").get<std::string>());
    IngestSpec spec = load_ingest_spec(cfg.at("spec").get<std::string>());
    Table survey = apply_column_map(raw, spec.column_map);

    std::vector<std::string> profiles = {"unit", "scaled"};
    if (cfg.contains("profiles")) {
        profiles.clear();
        for (const auto& p : cfg["profiles"]) profiles.push_back(p.get<std::string>());
    }

    std::ostringstream text, csv;
    csv << "profile," << "estimator,ate,var_hat,ci_low,ci_high,n_treated,n_control,status\n";
    int positive = 0, negative = 0, errors = 0;
    for (const auto& name : profiles) {
        WeightProfile profile;
        if (name == "unit") profile = unit_profile();
        else if (name == "scaled") profile = scaled_profile();
        else throw std::runtime_error("unknown weight profile: " + name);

        Dataset ds = build_cohort(survey, spec.cohort, spec.rules, spec.markers, profile,
                                  spec.covariates);
        Report report = run_battery(ds, cfg, seed);
        report.title = "Profile: " + name + " (n=" + std::to_string(ds.n()) + ")";
        text << report_to_text(report) << '\n';

        std::string body = report_to_csv(report);
        std::istringstream lines(body);
        std::string line;
        std::getline(lines, line);  // skip the per-table header
        while (std::getline(lines, line)) csv << name << ',' << line << '\n';

        for (const auto& row : report.rows) {
            if (!row.ok) { ++errors; continue; }
            (row.result.tau_hat >= 0.0 ? positive : negative)++;
        }
    }

    std::ostringstream agree;
    agree << "Sign agreement: " << positive << " positive, " << negative
          << " negative, " << errors << " failed across "
          << profiles.size() << " profile(s)\n";
    text << agree.str();

    const std::string prefix = cfg.value("output_prefix", std::string("sensitivity"));
    write_text_file(prefix + ".csv", csv.str());
    write_text_file(prefix + ".txt", text.str());
    std::cout << text.str();
    return 0;
}

int cmd_simulate(const std::string& config_path) {
    json cfg = load_config(config_path);

    DGPConfig dgp;
    dgp.n = cfg.value("n", 2000L);
    dgp.d = cfg.value("d", 5);
    dgp.beta = cfg.contains("beta") ? coef_vector(cfg["beta"], dgp.d, "beta")
                                    : Eigen::VectorXd::Constant(dgp.d, 0.2).eval();
    dgp.gamma = cfg.contains("gamma") ? coef_vector(cfg["gamma"], dgp.d, "gamma")
                                      : Eigen::VectorXd::Constant(dgp.d, 1.0).eval();
    dgp.alpha = cfg.value("alpha", 0.0);
    dgp.tau = cfg.value("tau", 2.0);
    dgp.noise_sd = cfg.value("noise_sd", 1.0);
    dgp.misspec = misspec_from_string(cfg.value("misspec", std::string("none")));

    const int R = cfg.value("replications", 200);
    const auto seed = cfg.value("seed", std::uint64_t{0});

    std::vector<EstimatorSpec> estimators;
    if (cfg.contains("estimators")) {
        for (const auto& e : cfg["estimators"]) {
            EstimatorSpec s;
            const std::string kind = e.at("kind").get<std::string>();
            if (kind == "lins") s.kind = EstimatorKind::lins;
            else if (kind == "ht") s.kind = EstimatorKind::ht;
            else if (kind == "hajek") s.kind = EstimatorKind::hajek;
            else if (kind == "aipw") s.kind = EstimatorKind::aipw;
            else if (kind == "matching") s.kind = EstimatorKind::matching;
            else throw std::runtime_error("unknown estimator kind: " + kind);
            s.caliper = e.value("caliper", 0.1);
            if (e.contains("model"))
                s.model_kind = model_kind_from_string(e["model"].get<std::string>());
            estimators.push_back(s);
        }
    } else {
        estimators.push_back({EstimatorKind::lins});
        estimators.push_back({EstimatorKind::ht});
        estimators.push_back({EstimatorKind::hajek});
        estimators.push_back({EstimatorKind::aipw});
        EstimatorSpec m;
        m.kind = EstimatorKind::matching;
        estimators.push_back(m);
    }

    ReplicationOptions opts;
    opts.weighting = weighting_from(cfg, seed);
    opts.n_threads = cfg.value("threads", 0);

    SimulationSummary summary = run_replications(dgp, estimators, R, seed, opts);
    const std::string output = cfg.value("output", std::string("simulation.csv"));
    export_summary_csv(summary, output);

    std::cout << "Simulation: R=" << summary.replications << ", tau=" << summary.true_tau
              << '\n';
    for (const auto& st : summary.per_estimator)
        std::cout << "  " << st.label << ": bias=" << st.mean_bias
                  << " coverage=" << st.coverage << " ok=" << st.n_success
                  << " failed=" << st.n_failed << '\n';
    return 0;
}

int cmd_ingest(const std::string& config_path) {
    json cfg = load_config(config_path);

    Table raw = load_table_csv(cfg.at("survey").get<std::string>());
    IngestSpec spec = load_ingest_spec(cfg.at("spec").get<std::string>());
    Table survey = apply_column_map(raw, spec.column_map);

    const std::string name = cfg.value("profile", std::string("unit"));
    WeightProfile profile;
    if (name == "unit") profile = unit_profile();
    else if (name == "scaled") profile = scaled_profile();
    else throw std::runtime_error("unknown weight profile: " + name);

    Dataset ds = build_cohort(survey, spec.cohort, spec.rules, spec.markers, profile,
                              spec.covariates);
    const std::string output = cfg.value("output", std::string("dataset.csv"));
    save_dataset_csv(ds, output);

    std::cout << "Ingested " << ds.n() << " units (" << ds.n_treated() << " treated, "
              << ds.n_control() << " control), " << ds.dim()
              << " encoded covariates -> " << output << '\n';
    return 0;
}

int cmd_balance(const std::string& config_path) {
    json cfg = load_config(config_path);
    Dataset ds = load_configured_dataset(cfg);
    const auto rep = validate_dataset(ds);
    if (!rep.ok) throw std::runtime_error("dataset invalid");

    PropensityModel pm = fit_logistic(ds.covariates, ds.treatment);
    Eigen::VectorXd e_hat = predict_propensity(pm, ds.covariates);

    const double caliper = cfg.value("caliper", 0.1);
    DistanceMatrix dm = robust_mahalanobis(ds);
    MatchSet ms = optimal_match(caliper_filter(dm, e_hat, caliper));

    BalanceReport balance = balance_table(ds, &ms, e_hat);
    const std::string output = cfg.value("output", std::string("balance.csv"));
    export_balance_csv(balance, output);

    std::cout << "Matched " << ms.pairs.size() << " pairs ("
              << ms.dropped_treated.size() << " treated dropped, caliper " << caliper
              << ")\n";
    std::cout << "Max |SMD| pre: " << balance.pre.cwiseAbs().maxCoeff()
              << "  post: " << balance.post.cwiseAbs().maxCoeff() << " -> " << output
              << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ATE estimation toolkit for observational survey studies"};
    app.require_subcommand(1);

    std::string config_path;
    int (*handler)(const std::string&) = nullptr;

    auto add = [&](const char* name, const char* desc, int (*fn)(const std::string&)) {
        auto* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->callback([&, fn] { handler = fn; });
    };
    add("estimate", "Run the estimator battery on a dataset CSV", &cmd_estimate);
    add("sensitivity", "Estimator battery per weight profile on survey input",
        &cmd_sensitivity);
    add("simulate", "Monte Carlo replications of the synthetic DGP", &cmd_simulate);
    add("ingest", "Survey CSV plus ingest spec to dataset CSV", &cmd_ingest);
    add("balance", "Pre/post matching covariate balance table", &cmd_balance);

    CLI11_PARSE(app, argc, argv);

    try {
        return handler(config_path);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << '\n';
        return 1;
    }
}
