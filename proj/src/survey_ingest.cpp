#include "finlit/survey_ingest.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace finlit {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool parse_long(const std::string& s, long* out) {
    if (s.empty()) return false;
    size_t pos = 0;
    try {
        const long v = std::stol(s, &pos);
        if (pos != s.size()) return false;
        if (out) *out = v;
        return true;
    } catch (const std::exception&) {
        return false;
    }
}

std::string canonicalize(const std::string& cell) {
    std::string t = trim(cell);
    long v = 0;
    if (parse_long(t, &v)) return std::to_string(v);
    return t;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

long require_long(const std::string& cell, const std::string& column) {
    long v = 0;
    if (!parse_long(trim(cell), &v))
        throw std::runtime_error("unparseable cell '" + cell + "' in numeric column " + column);
    return v;
}

}  // namespace

int Table::column_index(const std::string& name) const {
    auto it = std::find(columns.begin(), columns.end(), name);
    return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

Table load_table_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open survey file: " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty survey file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    for (auto& c : split_csv_line(line)) t.columns.push_back(trim(c));
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.columns.size())
            throw std::runtime_error("ragged row in survey file: " + path);
        t.rows.push_back(std::move(cells));
    }
    return t;
}

Table apply_column_map(const Table& raw, const std::map<std::string, std::string>& column_map) {
    for (const auto& [old_name, _] : column_map)
        if (raw.column_index(old_name) < 0)
            throw std::runtime_error("column map references absent column: " + old_name);

    Table out;
    out.columns.reserve(raw.columns.size());
    for (const auto& name : raw.columns) {
        auto it = column_map.find(name);
        out.columns.push_back(it == column_map.end() ? name : it->second);
    }
    out.rows.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& cell : row) cells.push_back(canonicalize(cell));
        out.rows.push_back(std::move(cells));
    }
    return out;
}

double rescale_marker(long raw_value, const MarkerSpec& spec) {
    if (spec.raw_min >= spec.raw_max)
        throw std::invalid_argument("MarkerSpec: raw_min must be < raw_max");
    if (spec.nonresponse_codes.count(raw_value)) return 4.5;
    if (raw_value < spec.raw_min || raw_value > spec.raw_max)
        throw std::runtime_error("marker value " + std::to_string(raw_value) +
                                 " outside range of " + spec.column);
    const double span = static_cast<double>(spec.raw_max - spec.raw_min);
    if (spec.orientation == Orientation::ascending_good)
        return 9.0 * static_cast<double>(raw_value - spec.raw_min) / span;
    return 9.0 * static_cast<double>(spec.raw_max - raw_value) / span;
}

WeightProfile unit_profile() {
    WeightProfile p;
    p.name = "unit";
    p.weights = Eigen::VectorXd::Ones(kMarkerCount);
    return p;
}

WeightProfile scaled_profile() {
    WeightProfile p;
    p.name = "scaled";
    p.weights.resize(kMarkerCount);
    p.weights << 1, 1, 1, 0.5, 0.5, 1, 0.25, 0.25, 0.5, 1, 0.75, 1, 1.25, 0.5, 2, 1, 0.5;
    return p;
}

double composite_health_score(const Eigen::VectorXd& markers, const WeightProfile& profile) {
    if (markers.size() != kMarkerCount)
        throw std::invalid_argument("composite_health_score: need exactly 17 markers");
    if (profile.weights.size() != kMarkerCount || (profile.weights.array() <= 0.0).any())
        throw std::invalid_argument("composite_health_score: invalid weight profile");
    for (Eigen::Index i = 0; i < markers.size(); ++i)
        if (!(markers[i] >= 0.0 && markers[i] <= 9.0))
            throw std::runtime_error("marker value outside [0,9]");
    return profile.weights.dot(markers);
}

Dataset build_cohort(const Table& survey, const CohortSpec& spec, const CohortRules& rules,
                     const std::vector<MarkerSpec>& marker_specs, const WeightProfile& profile,
                     const std::vector<CovariateSpec>& covariate_specs) {
    const bool hs_pairing = spec.treatment_rule == TreatmentRule::high_school_only;
    if (hs_pairing != (spec.control_rule == ControlRule::certain_no_hs))
        throw std::invalid_argument("build_cohort: unsupported cohort rule pairing");
    if (marker_specs.size() != kMarkerCount)
        throw std::invalid_argument("build_cohort: need exactly 17 marker specs");

    const int course_col = survey.column_index(rules.course_column);
    if (course_col < 0)
        throw std::runtime_error("survey missing course column: " + rules.course_column);

    std::vector<int> marker_cols;
    for (const auto& m : marker_specs) {
        const int c = survey.column_index(m.column);
        if (c < 0) throw std::runtime_error("survey missing marker column: " + m.column);
        marker_cols.push_back(c);
    }
    std::vector<int> cov_cols;
    for (const auto& c : covariate_specs) {
        const int idx = survey.column_index(c.column);
        if (idx < 0) throw std::runtime_error("survey missing covariate column: " + c.column);
        cov_cols.push_back(idx);
    }

    const auto& treated_codes =
        hs_pairing ? rules.codes_high_school : rules.codes_any_venue;
    const auto& control_codes =
        hs_pairing ? rules.codes_certain_no_hs : rules.codes_certain_never;

    // pass 1: select rows, collect one-hot levels over included rows
    struct Selected {
        size_t row;
        int z;
    };
    std::vector<Selected> selected;
    std::vector<std::set<long>> levels(covariate_specs.size());

    for (size_t r = 0; r < survey.rows.size(); ++r) {
        const auto& row = survey.rows[r];
        long course = 0;
        if (!parse_long(row[static_cast<size_t>(course_col)], &course)) continue;

        int z;
        if (treated_codes.count(course)) z = 1;
        else if (control_codes.count(course)) z = 0;
        else continue;  // "don't know" and everything else

        bool usable = true;
        for (size_t j = 0; j < covariate_specs.size(); ++j) {
            long v = 0;
            if (!parse_long(row[static_cast<size_t>(cov_cols[j])], &v) ||
                covariate_specs[j].nonresponse_codes.count(v)) {
                usable = false;
                break;
            }
        }
        if (!usable) continue;
        for (int c : marker_cols) {
            if (!parse_long(row[static_cast<size_t>(c)], nullptr)) { usable = false; break; }
        }
        if (!usable) continue;

        for (size_t j = 0; j < covariate_specs.size(); ++j) {
            if (covariate_specs[j].kind != CovariateKind::onehot) continue;
            levels[j].insert(require_long(row[static_cast<size_t>(cov_cols[j])],
                                          covariate_specs[j].column));
        }
        selected.push_back({r, z});
    }

    // encoded layout: ordinal -> one column; one-hot -> levels minus the first
    std::vector<std::string> names;
    for (size_t j = 0; j < covariate_specs.size(); ++j) {
        if (covariate_specs[j].kind == CovariateKind::ordinal) {
            names.push_back(covariate_specs[j].column);
        } else {
            bool first = true;
            for (long lv : levels[j]) {
                if (first) { first = false; continue; }
                names.push_back(covariate_specs[j].column + "_" + std::to_string(lv));
            }
        }
    }

    Dataset ds;
    const auto n = static_cast<Eigen::Index>(selected.size());
    ds.covariates = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(names.size()));
    ds.outcome.resize(n);
    ds.treatment.resize(selected.size());
    ds.covariate_names = names;

    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = survey.rows[selected[static_cast<size_t>(i)].row];
        ds.treatment[static_cast<size_t>(i)] = selected[static_cast<size_t>(i)].z;

        Eigen::VectorXd markers(kMarkerCount);
        for (int m = 0; m < kMarkerCount; ++m) {
            const long raw = require_long(row[static_cast<size_t>(marker_cols[static_cast<size_t>(m)])],
                                          marker_specs[static_cast<size_t>(m)].column);
            markers[m] = rescale_marker(raw, marker_specs[static_cast<size_t>(m)]);
        }
        ds.outcome[i] = composite_health_score(markers, profile);

        Eigen::Index col = 0;
        for (size_t j = 0; j < covariate_specs.size(); ++j) {
            const long v = require_long(row[static_cast<size_t>(cov_cols[j])],
                                        covariate_specs[j].column);
            if (covariate_specs[j].kind == CovariateKind::ordinal) {
                ds.covariates(i, col++) = static_cast<double>(v);
            } else {
                bool first = true;
                for (long lv : levels[j]) {
                    if (first) { first = false; continue; }
                    if (v == lv) ds.covariates(i, col) = 1.0;
                    ++col;
                }
            }
        }
    }

    const auto rep = validate_dataset(ds);
    if (!rep.ok) {
        std::string msg = "build_cohort produced invalid dataset:";
        for (const auto& v : rep.violations) msg += " " + v + ";";
        throw std::runtime_error(msg);
    }
    return ds;
}

namespace {

using nlohmann::json;

std::set<long> code_set(const json& j) {
    std::set<long> s;
    for (const auto& v : j) s.insert(v.get<long>());
    return s;
}

}  // namespace

IngestSpec load_ingest_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open ingest spec: " + path);
    json j = json::parse(in);

    IngestSpec spec;
    if (j.contains("column_map"))
        for (const auto& [k, v] : j.at("column_map").items())
            spec.column_map[k] = v.get<std::string>();

    const auto& cohort = j.at("cohort");
    const std::string trule = cohort.at("treatment_rule").get<std::string>();
    const std::string crule = cohort.at("control_rule").get<std::string>();
    if (trule == "any_venue") spec.cohort.treatment_rule = TreatmentRule::any_venue;
    else if (trule == "high_school_only") spec.cohort.treatment_rule = TreatmentRule::high_school_only;
    else throw std::runtime_error("unknown treatment_rule: " + trule);
    if (crule == "certain_never") spec.cohort.control_rule = ControlRule::certain_never;
    else if (crule == "certain_no_hs") spec.cohort.control_rule = ControlRule::certain_no_hs;
    else throw std::runtime_error("unknown control_rule: " + crule);

    spec.rules.course_column = cohort.at("course_column").get<std::string>();
    spec.rules.codes_any_venue = code_set(cohort.at("codes_any_venue"));
    spec.rules.codes_high_school = code_set(cohort.at("codes_high_school"));
    spec.rules.codes_certain_never = code_set(cohort.at("codes_certain_never"));
    spec.rules.codes_certain_no_hs = code_set(cohort.at("codes_certain_no_hs"));

    for (const auto& m : j.at("markers")) {
        MarkerSpec ms;
        ms.column = m.at("column").get<std::string>();
        ms.raw_min = m.at("raw_min").get<long>();
        ms.raw_max = m.at("raw_max").get<long>();
        const std::string o = m.at("orientation").get<std::string>();
        if (o == "ascending_good") ms.orientation = Orientation::ascending_good;
        else if (o == "descending_good") ms.orientation = Orientation::descending_good;
        else throw std::runtime_error("unknown orientation: " + o);
        if (m.contains("nonresponse_codes")) ms.nonresponse_codes = code_set(m.at("nonresponse_codes"));
        for (long c : ms.nonresponse_codes)
            if (c >= ms.raw_min && c <= ms.raw_max)
                throw std::runtime_error("nonresponse code inside answer range for " + ms.column);
        spec.markers.push_back(std::move(ms));
    }
    if (spec.markers.size() != kMarkerCount)
        throw std::runtime_error("ingest spec must declare exactly 17 markers");

    for (const auto& c : j.at("covariates")) {
        CovariateSpec cs;
        cs.column = c.at("column").get<std::string>();
        const std::string kind = c.at("kind").get<std::string>();
        if (kind == "ordinal") cs.kind = CovariateKind::ordinal;
        else if (kind == "onehot") cs.kind = CovariateKind::onehot;
        else throw std::runtime_error("unknown covariate kind: " + kind);
        if (c.contains("nonresponse_codes")) cs.nonresponse_codes = code_set(c.at("nonresponse_codes"));
        spec.covariates.push_back(std::move(cs));
    }
    return spec;
}

}  // namespace finlit
