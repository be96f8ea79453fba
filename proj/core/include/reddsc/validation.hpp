#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reddsc/donor_pool.hpp"
#include "reddsc/panel.hpp"
#include "reddsc/solver.hpp"

namespace reddsc {

/// Pre-treatment split: training years run through train_end_year, the
/// validation window is (train_end_year, validation_end_year].
struct Window {
    Year train_end_year = 0;
    Year validation_end_year = 0;
};

struct ValidationThresholds {
    double final_year_pct_area = 0.5;  ///< fail strictly above (percent of project area)
    double max_gap_ratio = 0.2;        ///< pass strictly below
    double rmspe_ratio = 5.0;          ///< fail strictly above
};

/// Final-validation-year gap as a share of project area.
struct FinalYearAreaResult {
    double diff_ha = 0.0;       ///< d_PA - d_SC at the last validation year
    double diff_pct_area = 0.0; ///< 100 * diff_ha / area_ha
    bool pass = false;          ///< |diff_pct_area| <= threshold
};

/// Largest absolute validation-window gap relative to final-year project
/// deforestation.
struct MaxGapRatioResult {
    double max_abs_diff_ha = 0.0;
    double ratio = 0.0;  ///< max_abs_diff_ha / d_PA(final validation year)
    bool pass = false;   ///< ratio < threshold
    bool zero_final_deforestation = false;  ///< denominator zero: automatic fail, flagged
};

/// Validation-to-training RMSPE ratio of the gap series.
struct RmspeRatioResult {
    double rmspe_train = 0.0;
    double rmspe_valid = 0.0;
    double ratio = 0.0;  ///< +inf when rmspe_train == 0 and rmspe_valid > 0
    bool pass = false;   ///< ratio <= threshold
    bool perfect_fit = false;  ///< both RMSPEs zero; reported as a pass
};

FinalYearAreaResult final_year_area_test(const ScFit& fit, const SitePanel& project,
                                         const Window& window,
                                         const ValidationThresholds& thresholds = {});

MaxGapRatioResult max_gap_ratio_test(const ScFit& fit, const SitePanel& project,
                                     const Window& window,
                                     const ValidationThresholds& thresholds = {});

RmspeRatioResult rmspe_ratio_test(const ScFit& fit, const SitePanel& project,
                                  const Window& window,
                                  const ValidationThresholds& thresholds = {});

struct ValidationReport {
    std::string project_id;
    std::string country;
    Method method = Method::scm;
    Window window;
    FinalYearAreaResult final_year;
    MaxGapRatioResult max_gap;
    RmspeRatioResult rmspe;
    int donors_used = 0;
    std::optional<double> filter_tolerance;
    bool filter_fell_back = false;  ///< zero project buffer or exhausted ladder
    bool degenerate_training = false;
    bool fit_failed = false;  ///< flagged row; never aborts the batch
    std::string error;
};

struct MethodCounts {
    int n = 0;
    int final_year_pass = 0;
    int max_gap_pass = 0;
    int rmspe_pass = 0;
    int both_ratio_pass = 0;    ///< passes both the max-gap and RMSPE tests
    int either_ratio_fail = 0;  ///< fails at least one of the two
};

struct ValidationSummary {
    int n_projects = 0;
    std::map<Method, MethodCounts> by_method;
    /// Projects passing both ratio tests under every fitted method
    /// (meaningful when two methods run).
    int both_ratio_pass_all_methods = 0;
};

struct BatchValidation {
    std::vector<ValidationReport> reports;
    ValidationSummary summary;
};

/// Per-project training/validation split years.
struct SplitPlan {
    std::map<std::string, Year> train_end_overrides;  ///< project_id -> train_end_year
};

/// Default split: train_end at the floor midpoint between the first record
/// year and the project's validation_end_year.
Window split_for(const Project& project, const SplitPlan& plan);

/// Runs every test for every project under every requested method.
/// Per-project failures become flagged rows; the batch never aborts.
BatchValidation validate_all(const PanelSet& set, const std::vector<Method>& methods,
                             const FitConfig& fit_cfg, const FilterConfig& filter_cfg,
                             const SplitPlan& splits = {},
                             const ValidationThresholds& thresholds = {},
                             int workers = 1);

ValidationSummary summarize_validation(const std::vector<ValidationReport>& reports);

}  // namespace reddsc
