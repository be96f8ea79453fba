#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reddsc/donor_pool.hpp"
#include "reddsc/panel.hpp"
#include "reddsc/solver.hpp"
#include "reddsc/validation.hpp"

namespace reddsc {

enum class FilterState { with_filter, without_filter };

std::string_view filter_state_name(FilterState s);

/// Post-treatment gaps and their mean. Negative gaps mean less deforestation
/// in the project area than in its synthetic control.
struct AttResult {
    std::string project_id;
    Method method = Method::scm;
    FilterState filter_state = FilterState::with_filter;
    YearSeries gap_series;  ///< d_PA - d_SC on start_year..final year
    double att = 0.0;       ///< arithmetic mean of gap_series
    YearSeries ci_lower;    ///< empty unless bands were computed
    YearSeries ci_upper;
};

AttResult att(const ScFit& fit, const SitePanel& project, const ProjectMeta& meta);

struct JackknifeBands {
    YearSeries lower;
    YearSeries upper;
};

/// Jackknife+ bands over the post-treatment gap: each donor is left out in
/// turn, the model refit, and the held-out gap predictions combined with
/// pre-treatment RMSPE conformity scores through the jackknife+ quantile
/// construction. With few donors the 2.5%/97.5% quantiles saturate at the
/// leave-one-out extremes.
JackknifeBands jackknife_plus_bands(const SitePanel& project, const ProjectMeta& meta,
                                    const std::vector<const SitePanel*>& donors,
                                    const FitConfig& cfg, double alpha = 0.05);

struct SensitivityRow {
    std::string project_id;
    std::string country;
    double att_without = 0.0;
    double att_with = 0.0;
    /// 100 * (att_with - att_without) / att_with; unset when att_with == 0.
    std::optional<double> diff_pct;
};

struct SensitivitySummary {
    int n_rows = 0;
    int n_defined = 0;       ///< rows with a defined diff_pct
    int sign_reversals = 0;  ///< att_with and att_without of opposite sign
    double mean_abs_diff_pct = 0.0;
    double median_abs_diff_pct = 0.0;
};

struct SensitivityTable {
    std::vector<SensitivityRow> rows;
    SensitivitySummary summary;
};

double sensitivity_diff_pct(double att_without, double att_with);

/// Fits every project with the donor filter on and off and compares the two
/// ATT estimates per the diff_pct convention above.
SensitivityTable sensitivity_table(const PanelSet& set, const FitConfig& fit_cfg,
                                   const FilterConfig& filter_cfg, const SplitPlan& splits = {},
                                   int workers = 1);

SensitivitySummary summarize_sensitivity(const std::vector<SensitivityRow>& rows);

}  // namespace reddsc
