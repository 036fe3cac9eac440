#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace finlit {

struct LogisticConfig {
    int max_iter = 100;
    double tol = 1e-8;
    double ridge = 1e-6;  // keeps separable designs finite
};

// Ridge-penalized logistic regression fitted by IRLS. Intercept first.
struct PropensityModel {
    Eigen::VectorXd coefficients;  // length d+1
    bool converged = false;
    int n_iterations = 0;
};

PropensityModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& Z,
                             const LogisticConfig& cfg = {});

// Elementwise logistic of the linear predictor; strictly inside (0,1).
Eigen::VectorXd predict_propensity(const PropensityModel& model, const Eigen::MatrixXd& X);

// Clamp to [lo, hi]; idempotent.
Eigen::VectorXd truncate_propensity(const Eigen::VectorXd& e_hat,
                                    double lo = 0.025, double hi = 0.975);

enum class ModelKind { ols, forest, constant_stub };

ModelKind model_kind_from_string(const std::string& s);
std::string to_string(ModelKind k);

// Uniform predict contract over the outcome models.
class RegressionModel {
public:
    virtual ~RegressionModel() = default;
    virtual double predict_one(const Eigen::RowVectorXd& x) const = 0;
    virtual ModelKind kind() const = 0;
    virtual std::string serialize() const = 0;

    Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

class OlsModel final : public RegressionModel {
public:
    // Intercept first; collinear columns dropped during fit get coefficient 0.
    explicit OlsModel(Eigen::VectorXd coef) : coef_(std::move(coef)) {}
    double predict_one(const Eigen::RowVectorXd& x) const override;
    ModelKind kind() const override { return ModelKind::ols; }
    std::string serialize() const override;
    const Eigen::VectorXd& coefficients() const { return coef_; }

private:
    Eigen::VectorXd coef_;
};

// Predicts one fixed value everywhere; test injection hook.
class ConstantModel final : public RegressionModel {
public:
    explicit ConstantModel(double value) : value_(value) {}
    double predict_one(const Eigen::RowVectorXd&) const override { return value_; }
    ModelKind kind() const override { return ModelKind::constant_stub; }
    std::string serialize() const override;
    double value() const { return value_; }

private:
    double value_;
};

std::unique_ptr<OlsModel> fit_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y);

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 12;
    int min_leaf = 5;
    std::uint64_t seed = 0;
    int n_threads = 0;  // 0 = OpenMP default
};

std::unique_ptr<RegressionModel> fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& Y,
                                            const ForestConfig& cfg);

// Dispatch on kind; constant_stub ignores the data and predicts 0.
std::unique_ptr<RegressionModel> fit_regression(ModelKind kind, const Eigen::MatrixXd& X,
                                                const Eigen::VectorXd& Y,
                                                const ForestConfig& forest_cfg = {});

}  // namespace finlit
