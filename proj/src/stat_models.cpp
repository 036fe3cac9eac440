#include "finlit/stat_models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace finlit {

namespace {

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
    Eigen::MatrixXd Xd(X.rows(), X.cols() + 1);
    Xd.col(0).setOnes();
    Xd.rightCols(X.cols()) = X;
    return Xd;
}

}  // namespace

PropensityModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& Z,
                             const LogisticConfig& cfg) {
    const Eigen::Index n = X.rows();
    if (static_cast<Eigen::Index>(Z.size()) != n)
        throw std::invalid_argument("fit_logistic: Z length != n");
    if (n <= X.cols()) throw std::invalid_argument("fit_logistic: need n > d");

    Eigen::MatrixXd Xd = with_intercept(X);
    const Eigen::Index p = Xd.cols();
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = Z[static_cast<size_t>(i)];

    PropensityModel model;
    model.coefficients = Eigen::VectorXd::Zero(p);

    for (int it = 0; it < cfg.max_iter; ++it) {
        Eigen::VectorXd eta = Xd * model.coefficients;
        Eigen::VectorXd prob = (1.0 + (-eta.array()).exp()).inverse();
        Eigen::VectorXd w = prob.array() * (1.0 - prob.array());

        Eigen::MatrixXd H = Xd.transpose() * w.asDiagonal() * Xd;
        H.diagonal().array() += cfg.ridge;
        Eigen::VectorXd grad = Xd.transpose() * (z - prob) - cfg.ridge * model.coefficients;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success)
            throw std::runtime_error("fit_logistic: singular weighted design");
        Eigen::VectorXd step = ldlt.solve(grad);

        model.coefficients += step;
        model.n_iterations = it + 1;
        if (step.cwiseAbs().maxCoeff() < cfg.tol) {
            model.converged = true;
            break;
        }
    }
    if (!model.coefficients.allFinite())
        throw std::runtime_error("fit_logistic: diverged to non-finite coefficients");
    return model;
}

Eigen::VectorXd predict_propensity(const PropensityModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() + 1 != model.coefficients.size())
        throw std::invalid_argument("predict_propensity: column count mismatch");
    Eigen::VectorXd eta = with_intercept(X) * model.coefficients;
    Eigen::VectorXd p = (1.0 + (-eta.array()).exp()).inverse();
    // logistic never reaches 0/1 exactly, but exp() can round there
    constexpr double eps = 1e-15;
    return p.cwiseMax(eps).cwiseMin(1.0 - eps);
}

Eigen::VectorXd truncate_propensity(const Eigen::VectorXd& e_hat, double lo, double hi) {
    if (!(0.0 < lo && lo < hi && hi < 1.0))
        throw std::invalid_argument("truncate_propensity: need 0 < lo < hi < 1");
    return e_hat.cwiseMax(lo).cwiseMin(hi);
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "ols") return ModelKind::ols;
    if (s == "forest") return ModelKind::forest;
    if (s == "constant_stub") return ModelKind::constant_stub;
    throw std::invalid_argument("unknown model kind: " + s);
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::ols: return "ols";
        case ModelKind::forest: return "forest";
        case ModelKind::constant_stub: return "constant_stub";
    }
    return "?";
}

Eigen::VectorXd RegressionModel::predict(const Eigen::MatrixXd& X) const {
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = predict_one(X.row(i));
    return out;
}

double OlsModel::predict_one(const Eigen::RowVectorXd& x) const {
    if (x.size() + 1 != coef_.size())
        throw std::invalid_argument("OlsModel::predict: column count mismatch");
    return coef_[0] + x.dot(coef_.tail(coef_.size() - 1));
}

std::string OlsModel::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "ols";
    for (Eigen::Index i = 0; i < coef_.size(); ++i) os << ' ' << coef_[i];
    return os.str();
}

std::string ConstantModel::serialize() const {
    std::ostringstream os;
    os.precision(17);
    os << "constant_stub " << value_;
    return os.str();
}

std::unique_ptr<OlsModel> fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y) {
    const Eigen::Index n = X.rows();
    if (Y.size() != n) throw std::invalid_argument("fit_ols: Y length != n");
    if (n <= X.cols()) throw std::invalid_argument("fit_ols: need n > d");

    Eigen::MatrixXd Xd = with_intercept(X);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xd);
    if (qr.rank() == 0) throw std::runtime_error("fit_ols: rank-deficient beyond repair");
    // rank-revealing solve zeroes the dependent directions (collinear columns)
    Eigen::VectorXd coef = qr.solve(Y);
    if (!coef.allFinite()) throw std::runtime_error("fit_ols: non-finite coefficients");
    return std::make_unique<OlsModel>(std::move(coef));
}

std::unique_ptr<RegressionModel> fit_regression(ModelKind kind, const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& Y,
                                                const ForestConfig& forest_cfg) {
    switch (kind) {
        case ModelKind::ols: return fit_ols(X, Y);
        case ModelKind::forest: return fit_forest(X, Y, forest_cfg);
        case ModelKind::constant_stub: return std::make_unique<ConstantModel>(0.0);
    }
    throw std::invalid_argument("fit_regression: bad kind");
}

}  // namespace finlit
