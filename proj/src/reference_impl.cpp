#include "finlit/reference_impl.hpp"

#include "finlit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace finlit::ref {

namespace {

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
        while (j + 1 < n &&
               col[order[static_cast<size_t>(j + 1)]] == col[order[static_cast<size_t>(i)]])
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (Eigen::Index k = i; k <= j; ++k) ranks[order[static_cast<size_t>(k)]] = r;
        i = j + 1;
    }
    return ranks;
}

double point_ht(const std::vector<int>& Z, const Eigen::VectorXd& Y, const Eigen::VectorXd& e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < Y.size(); ++i) {
        const double zi = Z[static_cast<size_t>(i)];
        acc += zi * Y[i] / e[i] - (1.0 - zi) * Y[i] / (1.0 - e[i]);
    }
    return acc / static_cast<double>(Y.size());
}

double point_hajek(const std::vector<int>& Z, const Eigen::VectorXd& Y,
                   const Eigen::VectorXd& e) {
    double num_t = 0.0, den_t = 0.0, num_c = 0.0, den_c = 0.0;
    for (Eigen::Index i = 0; i < Y.size(); ++i) {
        const double zi = Z[static_cast<size_t>(i)];
        num_t += zi * Y[i] / e[i];
        den_t += zi / e[i];
        num_c += (1.0 - zi) * Y[i] / (1.0 - e[i]);
        den_c += (1.0 - zi) / (1.0 - e[i]);
    }
    return num_t / den_t - num_c / den_c;
}

double bootstrap_serial(const Dataset& ds, const WeightingConfig& cfg,
                        double (*point)(const std::vector<int>&, const Eigen::VectorXd&,
                                        const Eigen::VectorXd&)) {
    const int B = cfg.bootstrap_replicates;
    const int n = static_cast<int>(ds.n());
    std::vector<double> vals(static_cast<size_t>(B), std::numeric_limits<double>::quiet_NaN());

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
                Eigen::VectorXd eb = predict_propensity(pm, Xb);
                if (cfg.truncation.enabled)
                    eb = truncate_propensity(eb, cfg.truncation.lo, cfg.truncation.hi);
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
    if (m < 2) throw std::runtime_error("ref bootstrap: too few successful replicates");
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : vals)
        if (std::isfinite(v)) ss += (v - mean) * (v - mean);
    return ss / (m - 1);
}

}  // namespace

DistanceMatrix robust_mahalanobis(const Dataset& ds) {
    const Eigen::Index n = ds.n();
    const Eigen::Index d = ds.dim();
    Eigen::MatrixXd ranks(n, d);
    for (Eigen::Index j = 0; j < d; ++j) ranks.col(j) = average_ranks(ds.covariates.col(j));

    Eigen::MatrixXd centered = ranks.rowwise() - ranks.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    const double scale = cov.trace() / static_cast<double>(d);
    Eigen::MatrixXd inv;
    for (int attempt = 0; attempt < 3; ++attempt) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            inv = ldlt.solve(Eigen::MatrixXd::Identity(d, d));
            if (inv.allFinite() &&
                (cov * inv - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() < 1e-6)
                break;
        }
        cov.diagonal().array() += 1e-8 * (scale > 0.0 ? scale : 1.0);
        inv.resize(0, 0);
    }
    if (inv.size() == 0)
        throw std::runtime_error("ref robust_mahalanobis: rank covariance singular");

    DistanceMatrix dm;
    for (Eigen::Index i = 0; i < n; ++i)
        (ds.treatment[static_cast<size_t>(i)] == 1 ? dm.treated_index : dm.control_index)
            .push_back(static_cast<int>(i));
    dm.entries.resize(static_cast<Eigen::Index>(dm.treated_index.size()),
                      static_cast<Eigen::Index>(dm.control_index.size()));
    for (size_t a = 0; a < dm.treated_index.size(); ++a) {
        const Eigen::RowVectorXd ri = ranks.row(dm.treated_index[a]);
        for (size_t b = 0; b < dm.control_index.size(); ++b) {
            const Eigen::RowVectorXd diff = ri - ranks.row(dm.control_index[b]);
            dm.entries(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                diff * inv * diff.transpose();
        }
    }
    return dm;
}

double bootstrap_variance_ht(const Dataset& ds, const WeightingConfig& cfg) {
    return bootstrap_serial(ds, cfg, &point_ht);
}

double bootstrap_variance_hajek(const Dataset& ds, const WeightingConfig& cfg) {
    return bootstrap_serial(ds, cfg, &point_hajek);
}

}  // namespace finlit::ref
