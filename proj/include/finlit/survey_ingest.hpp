#pragma once

#include "finlit/dataset.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace finlit {

// A raw survey table: header labels plus string cells (trimmed on ingest).
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    int column_index(const std::string& name) const;  // -1 when absent
};

Table load_table_csv(const std::string& path);

// Renames columns per the map, trims every cell, and canonicalizes
// integer-like cells (" 03 " -> "3"). Errors on a mapped column that is
// missing from the table.
Table apply_column_map(const Table& raw, const std::map<std::string, std::string>& column_map);

enum class Orientation { ascending_good, descending_good };

struct MarkerSpec {
    std::string column;
    long raw_min = 0;
    long raw_max = 0;
    Orientation orientation = Orientation::ascending_good;
    std::set<long> nonresponse_codes = {98, 99, 999};
};

// Linear map of [raw_min, raw_max] onto [0,9] (reversed for
// descending_good); nonresponse codes map to exactly 4.5.
double rescale_marker(long raw_value, const MarkerSpec& spec);

constexpr int kMarkerCount = 17;

struct WeightProfile {
    Eigen::VectorXd weights;  // length 17, all > 0
    std::string name;
};

WeightProfile unit_profile();
WeightProfile scaled_profile();

// Weighted sum of the 17 rescaled markers. Unit profile gives the plain
// composite; the scaled profile the importance-weighted variant.
double composite_health_score(const Eigen::VectorXd& markers, const WeightProfile& profile);

enum class TreatmentRule { any_venue, high_school_only };
enum class ControlRule { certain_never, certain_no_hs };

struct CohortSpec {
    TreatmentRule treatment_rule = TreatmentRule::any_venue;
    ControlRule control_rule = ControlRule::certain_never;
};

// Answer-code sets for the education-venue question; supplied by the user
// from the survey codebook.
struct CohortRules {
    std::string course_column;
    std::set<long> codes_any_venue;
    std::set<long> codes_high_school;
    std::set<long> codes_certain_never;
    std::set<long> codes_certain_no_hs;
};

enum class CovariateKind { ordinal, onehot };

struct CovariateSpec {
    std::string column;
    CovariateKind kind = CovariateKind::ordinal;
    std::set<long> nonresponse_codes = {98, 99, 999};  // such rows are dropped
};

// Filters rows to the two cohort arms, computes the composite outcome from
// the 17 markers, and encodes covariates (ordinal as-is, categorical
// one-hot with the first level dropped). Rows outside both arms, with
// empty cells, or with covariate nonresponse are excluded.
Dataset build_cohort(const Table& survey, const CohortSpec& spec, const CohortRules& rules,
                     const std::vector<MarkerSpec>& marker_specs, const WeightProfile& profile,
                     const std::vector<CovariateSpec>& covariate_specs);

// The declarative ingest spec file (JSON): column map, cohort rules,
// marker specs in composite order, covariate roles.
struct IngestSpec {
    std::map<std::string, std::string> column_map;
    CohortSpec cohort;
    CohortRules rules;
    std::vector<MarkerSpec> markers;
    std::vector<CovariateSpec> covariates;
};

IngestSpec load_ingest_spec(const std::string& path);

}  // namespace finlit
