#include "finlit/dataset.hpp"

#include <doctest.h>

#include <cstdio>
#include <set>

using namespace finlit;

namespace {

Dataset four_units() {
    Dataset ds;
    ds.covariates.resize(4, 1);
    ds.covariates << 1, 2, 3, 4;
    ds.treatment = {1, 0, 1, 0};
    ds.outcome.resize(4);
    ds.outcome << 3, 1, 5, 2;
    ds.covariate_names = {"x1"};
    return ds;
}

}  // namespace

TEST_CASE("validate_dataset accepts a well-formed study") {
    auto rep = validate_dataset(four_units());
    CHECK(rep.ok);
    CHECK(rep.n == 4);
    CHECK(rep.d == 1);
    CHECK(rep.n_treated == 2);
    CHECK(rep.n_control == 2);
}

TEST_CASE("validate_dataset flags non-binary treatment") {
    auto ds = four_units();
    ds.treatment[1] = 2;
    auto rep = validate_dataset(ds);
    CHECK_FALSE(rep.ok);
    bool found = false;
    for (const auto& v : rep.violations) found |= v == "treatment not binary";
    CHECK(found);
}

TEST_CASE("validate_dataset flags an empty arm") {
    auto ds = four_units();
    ds.treatment = {0, 0, 0, 0};
    auto rep = validate_dataset(ds);
    CHECK_FALSE(rep.ok);
    bool found = false;
    for (const auto& v : rep.violations) found |= v == "no treated units";
    CHECK(found);
}

TEST_CASE("validate_dataset checks oracle consistency") {
    auto ds = four_units();
    OraclePotentials o;
    o.y0.resize(4);
    o.y1.resize(4);
    o.y1 << 3, 9, 5, 9;
    o.y0 << 9, 1, 9, 2;
    ds.oracle = o;
    CHECK(validate_dataset(ds).ok);

    ds.oracle->y1[0] = 99;
    CHECK_FALSE(validate_dataset(ds).ok);
}

TEST_CASE("split_random halves the data") {
    auto ds = four_units();
    auto s = split_random(ds, 7);
    CHECK(s.fold1.size() == 2);
    CHECK(s.fold2.size() == 2);

    Dataset ds5 = ds;
    ds5.covariates.conservativeResize(5, 1);
    ds5.covariates(4, 0) = 5;
    ds5.treatment.push_back(1);
    ds5.outcome.conservativeResize(5);
    ds5.outcome[4] = 0;
    auto s5 = split_random(ds5, 7);
    CHECK(s5.fold1.size() == 3);
    CHECK(s5.fold2.size() == 2);
}

TEST_CASE("split_random is deterministic in the seed") {
    auto ds = four_units();
    auto a = split_random(ds, 123);
    auto b = split_random(ds, 123);
    CHECK(a.fold1 == b.fold1);
    CHECK(a.fold2 == b.fold2);
}

TEST_CASE("split_random varies across seeds") {
    Dataset ds;
    const int n = 8;
    ds.covariates = Eigen::MatrixXd::Zero(n, 1);
    ds.outcome = Eigen::VectorXd::Zero(n);
    ds.treatment = {1, 0, 1, 0, 1, 0, 1, 0};
    ds.covariate_names = {"x1"};

    std::set<std::vector<int>> seen;
    for (int s = 0; s < 100; ++s) seen.insert(split_random(ds, static_cast<std::uint64_t>(s)).fold1);
    CHECK(seen.size() >= 2);
}

TEST_CASE("split_random covers all indices exactly once") {
    Dataset ds;
    const int n = 11;
    ds.covariates = Eigen::MatrixXd::Zero(n, 1);
    ds.outcome = Eigen::VectorXd::Zero(n);
    ds.treatment.assign(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; i += 2) ds.treatment[static_cast<size_t>(i)] = 1;
    ds.covariate_names = {"x1"};

    auto s = split_random(ds, 5);
    std::set<int> all(s.fold1.begin(), s.fold1.end());
    all.insert(s.fold2.begin(), s.fold2.end());
    CHECK(static_cast<int>(all.size()) == n);
    CHECK(static_cast<int>(s.fold1.size() + s.fold2.size()) == n);
    CHECK(std::abs(static_cast<int>(s.fold1.size()) - static_cast<int>(s.fold2.size())) <= 1);
}

TEST_CASE("split_random reports degenerate arm counts") {
    Dataset ds;
    ds.covariates = Eigen::MatrixXd::Zero(4, 1);
    ds.outcome = Eigen::VectorXd::Zero(4);
    ds.treatment = {1, 0, 0, 0};
    ds.covariate_names = {"x1"};
    // a single treated unit can never appear in both folds
    CHECK_THROWS(split_random(ds, 1, 1));
}

TEST_CASE("dataset CSV round trip") {
    auto ds = four_units();
    const std::string path = "test_dataset_roundtrip.csv";
    save_dataset_csv(ds, path);
    auto back = load_dataset_csv(path, "Z", "Y");
    std::remove(path.c_str());

    CHECK(back.n() == ds.n());
    CHECK(back.treatment == ds.treatment);
    CHECK(back.outcome.isApprox(ds.outcome));
    CHECK(back.covariates.isApprox(ds.covariates));
    CHECK(back.covariate_names == ds.covariate_names);
}

TEST_CASE("load_dataset_csv rejects missing role columns") {
    auto ds = four_units();
    const std::string path = "test_dataset_missing.csv";
    save_dataset_csv(ds, path);
    CHECK_THROWS(load_dataset_csv(path, "NOPE", "Y"));
    std::remove(path.c_str());
}
