#include "finlit/matching.hpp"

#include "finlit/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace finlit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Average ranks (1-based) with ties sharing the mean rank.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& col) {
    const Eigen::Index n = col.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return col[a] < col[b]; });

    Eigen::VectorXd ranks(n);
    Eigen::Index i = 0;
    while (i < n) {
        Eigen::Index j = i;
        while (j + 1 < n && col[order[static_cast<size_t>(j + 1)]] == col[order[static_cast<size_t>(i)]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<size_t>(k)]] = r;
        i = j + 1;
    }
    return ranks;
}

Eigen::MatrixXd rank_covariance_inverse(const Eigen::MatrixXd& ranks) {
    const Eigen::Index n = ranks.rows();
    const Eigen::Index d = ranks.cols();
    Eigen::MatrixXd centered = ranks.rowwise() - ranks.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);

    const double scale = cov.trace() / static_cast<double>(d);
    for (int attempt = 0; attempt < 3; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
            if (inv.allFinite() && (cov * inv - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-6)
                return inv;
        }
        cov.diagonal().array() += 1e-8 * (scale > 0.0 ? scale : 1.0);
    }
    throw std::runtime_error("robust_mahalanobis: rank covariance singular after ridge");
}

}  // namespace

DistanceMatrix robust_mahalanobis(const Dataset& ds, int n_threads) {
    if (ds.dim() < 1) throw std::invalid_argument("robust_mahalanobis: need d >= 1");

    const Eigen::Index n = ds.n();
    Eigen::MatrixXd ranks(n, ds.dim());
    for (Eigen::Index j = 0; j < ds.dim(); ++j) ranks.col(j) = average_ranks(ds.covariates.col(j));

    Eigen::MatrixXd inv = rank_covariance_inverse(ranks);

    DistanceMatrix dm;
    for (Eigen::Index i = 0; i < n; ++i)
        (ds.treatment[static_cast<size_t>(i)] == 1 ? dm.treated_index : dm.control_index)
            .push_back(static_cast<int>(i));

    const int n1 = static_cast<int>(dm.treated_index.size());
    const int n0 = static_cast<int>(dm.control_index.size());
    dm.entries.resize(n1, n0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(n_threads > 0 ? n_threads : omp_get_max_threads())
#endif
    for (int a = 0; a < n1; ++a) {
        const Eigen::RowVectorXd ri = ranks.row(dm.treated_index[static_cast<size_t>(a)]);
        for (int b = 0; b < n0; ++b) {
            const Eigen::RowVectorXd diff = ri - ranks.row(dm.control_index[static_cast<size_t>(b)]);
            dm.entries(a, b) = diff * inv * diff.transpose();
        }
    }
    (void)n_threads;
    return dm;
}

DistanceMatrix caliper_filter(const DistanceMatrix& dist, const Eigen::VectorXd& e_hat,
                              double c) {
    if (c <= 0.0) throw std::invalid_argument("caliper_filter: need c > 0");

    const Eigen::Index n = e_hat.size();
    const double mean = e_hat.mean();
    const double sd = n > 1 ? std::sqrt((e_hat.array() - mean).square().sum() /
                                        static_cast<double>(n - 1))
                            : 0.0;
    const double bound = c * sd;

    DistanceMatrix out = dist;
    out.caliper = c;
    out.scores = e_hat;
    for (Eigen::Index a = 0; a < out.entries.rows(); ++a) {
        const double ei = e_hat[out.treated_index[static_cast<size_t>(a)]];
        for (Eigen::Index b = 0; b < out.entries.cols(); ++b) {
            const double ek = e_hat[out.control_index[static_cast<size_t>(b)]];
            if (std::abs(ei - ek) > bound) out.entries(a, b) = kInf;
        }
    }
    return out;
}

MatchSet optimal_match(const DistanceMatrix& dist) {
    MatchSet ms;
    ms.caliper = dist.caliper;

    std::vector<int> assign = min_cost_assignment(dist.entries);
    double gap_sum = 0.0;
    for (size_t a = 0; a < assign.size(); ++a) {
        const int t_unit = dist.treated_index[a];
        const int b = assign[a];
        if (b < 0) {
            ms.dropped_treated.push_back(t_unit);
            continue;
        }
        const int c_unit = dist.control_index[static_cast<size_t>(b)];
        ms.pairs.emplace_back(t_unit, c_unit);
        ms.total_distance += dist.entries(static_cast<Eigen::Index>(a), b);
        if (dist.scores.size() > 0)
            gap_sum += std::abs(dist.scores[t_unit] - dist.scores[c_unit]);
    }
    if (!ms.pairs.empty() && dist.scores.size() > 0)
        ms.mean_score_gap = gap_sum / static_cast<double>(ms.pairs.size());
    return ms;
}

double matched_ate(const MatchSet& matches, const Dataset& ds) {
    if (matches.pairs.empty()) throw std::invalid_argument("matched_ate: empty match set");
    double s = 0.0;
    for (const auto& [t, c] : matches.pairs) s += ds.outcome[t] - ds.outcome[c];
    return s / static_cast<double>(matches.pairs.size());
}

EstimateResult bias_correct(const MatchSet& matches, const Dataset& ds,
                            const RegressionModel& mu0) {
    if (matches.pairs.empty()) throw std::invalid_argument("bias_correct: empty match set");
    const auto m = static_cast<double>(matches.pairs.size());

    double bias_sum = 0.0;
    Eigen::VectorXd adj_diff(static_cast<Eigen::Index>(matches.pairs.size()));
    for (size_t k = 0; k < matches.pairs.size(); ++k) {
        const auto& [t, c] = matches.pairs[k];
        const double bi = mu0.predict_one(ds.covariates.row(t)) -
                          mu0.predict_one(ds.covariates.row(c));
        bias_sum += bi;
        adj_diff[static_cast<Eigen::Index>(k)] = ds.outcome[t] - ds.outcome[c] - bi;
    }

    EstimateResult r;
    r.method = "matching_caliper";
    r.n_treated = static_cast<long>(matches.pairs.size());
    r.n_control = static_cast<long>(matches.pairs.size());
    r.tau_hat = adj_diff.mean();
    const double mean = r.tau_hat;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < adj_diff.size(); ++i)
        ss += (adj_diff[i] - mean) * (adj_diff[i] - mean);
    r.var_hat = matches.pairs.size() > 1 ? ss / (m - 1.0) / m : 0.0;
    apply_normal_ci(r);

    r.diagnostics["matched_ate"] = mean + bias_sum / m;
    r.diagnostics["bias_hat"] = bias_sum / m;
    r.diagnostics["n_dropped"] = static_cast<double>(matches.dropped_treated.size());
    r.diagnostics["mean_caliper_gap"] = matches.mean_score_gap;
    r.diagnostics["caliper"] = matches.caliper;
    return r;
}

namespace {

// (mean_t - mean_c) / pooled sd over the given unit lists.
std::pair<double, bool> smd(const Eigen::VectorXd& values, const std::vector<int>& treated,
                            const std::vector<int>& control) {
    auto moments = [&](const std::vector<int>& idx) {
        double s = 0.0, ss = 0.0;
        for (int i : idx) { s += values[i]; ss += values[i] * values[i]; }
        const auto m = static_cast<double>(idx.size());
        const double mean = s / m;
        const double var = idx.size() > 1 ? (ss - m * mean * mean) / (m - 1.0) : 0.0;
        return std::pair{mean, std::max(var, 0.0)};
    };
    const auto [mt, vt] = moments(treated);
    const auto [mc, vc] = moments(control);
    const double pooled = std::sqrt(0.5 * (vt + vc));
    if (pooled == 0.0) {
        if (mt == mc) return {0.0, false};
        return {std::numeric_limits<double>::quiet_NaN(), true};  // degenerate
    }
    return {(mt - mc) / pooled, false};
}

}  // namespace

BalanceReport balance_table(const Dataset& ds, const MatchSet* matches,
                            const Eigen::VectorXd& e_hat) {
    if (e_hat.size() != ds.n())
        throw std::invalid_argument("balance_table: propensity length != n");

    BalanceReport rep;
    rep.names = ds.covariate_names;
    rep.names.push_back("propensity_score");
    const auto p = static_cast<Eigen::Index>(rep.names.size());
    rep.pre.resize(p);
    rep.degenerate.assign(static_cast<size_t>(p), 0);

    std::vector<int> all_t, all_c;
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        (ds.treatment[static_cast<size_t>(i)] == 1 ? all_t : all_c).push_back(static_cast<int>(i));

    auto column = [&](Eigen::Index j) -> Eigen::VectorXd {
        return j < ds.dim() ? Eigen::VectorXd(ds.covariates.col(j)) : e_hat;
    };

    for (Eigen::Index j = 0; j < p; ++j) {
        auto [v, deg] = smd(column(j), all_t, all_c);
        rep.pre[j] = v;
        if (deg) rep.degenerate[static_cast<size_t>(j)] = 1;
    }

    if (matches != nullptr) {
        std::vector<int> mt, mc;
        for (const auto& [t, c] : matches->pairs) { mt.push_back(t); mc.push_back(c); }
        rep.post.resize(p);
        rep.has_post = true;
        for (Eigen::Index j = 0; j < p; ++j) {
            auto [v, deg] = smd(column(j), mt, mc);
            rep.post[j] = v;
            if (deg) rep.degenerate[static_cast<size_t>(j)] = 1;
        }
    }
    return rep;
}

void export_balance_csv(const BalanceReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write balance file: " + path);
    out << "covariate,pre,post\n";
    out.precision(17);
    for (size_t j = 0; j < report.names.size(); ++j) {
        out << report.names[j] << ',' << report.pre[static_cast<Eigen::Index>(j)] << ',';
        if (report.has_post) out << report.post[static_cast<Eigen::Index>(j)];
        out << '\n';
    }
}

}  // namespace finlit
