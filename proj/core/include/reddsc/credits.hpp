#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reddsc/errors.hpp"

namespace reddsc {

/// Inputs for one project's credit accounting. "raw" is the published
/// baseline that also counts pre-start deforestation; "correct" restricts
/// the baseline to post-start years.
struct CreditInputRow {
    std::string project_id;
    double avoided_defor_ha = 0.0;   ///< avoided deforestation per the SC analysis
    double baseline_raw_ha = 0.0;
    double baseline_correct_ha = 0.0;
    double expected_credits = 0.0;   ///< Mg CO2, ex ante
    double issued_credits = 0.0;     ///< Mg CO2, ex post
    bool exclude_from_inflation = false;  ///< source-document error, not systematic inflation
};

struct PercentReal {
    double fraction = 0.0;
    bool over_100 = false;
};

struct CreditLedgerRow {
    std::string project_id;
    double avoided_defor_ha = 0.0;
    double baseline_raw_ha = 0.0;
    double baseline_correct_ha = 0.0;
    double expected_credits = 0.0;
    double issued_credits = 0.0;
    double per_ha_raw = 0.0;       ///< Mg CO2 per ha, expected / raw baseline
    double per_ha_correct = 0.0;   ///< Mg CO2 per ha, expected / correct baseline
    double offsets_raw = 0.0;      ///< avoided * per_ha_raw, full precision
    double offsets_correct = 0.0;
    std::optional<PercentReal> pct_real_raw;      ///< offsets_raw / expected_credits
    std::optional<PercentReal> pct_real_correct;  ///< offsets_correct / issued_credits
    bool exclude_from_inflation = false;
};

/// Expected carbon offset per hectare of avoided deforestation, unrounded.
double per_hectare_factor(double expected_credits, double baseline_ha);

double offsets_from_sc(double avoided_ha, double per_ha);

/// Share of credited offsets backed by the SC analysis; flags > 100%.
PercentReal percent_real(double offsets_sc, double denominator_credits);

/// All derived columns at full precision; rounding is a display concern.
/// A zero credit denominator leaves the matching pct_real unset.
CreditLedgerRow compute_ledger_row(const CreditInputRow& in);

std::vector<CreditLedgerRow> compute_ledger(const std::vector<CreditInputRow>& inputs);

struct LedgerTotals {
    double total_offsets_raw = 0.0;
    double total_offsets_correct = 0.0;
    double total_expected = 0.0;
    double total_issued = 0.0;
    std::optional<PercentReal> pct_real_raw;      ///< total_offsets_raw / total_expected
    std::optional<PercentReal> pct_real_correct;  ///< total_offsets_correct / total_issued
    std::optional<double> relative_increase;      ///< pct_real_correct / pct_real_raw - 1
};

LedgerTotals ledger_totals(const std::vector<CreditLedgerRow>& rows);

struct InflationStats {
    double mean = 0.0;  ///< arithmetic mean of per-row baseline_raw/baseline_correct - 1
    double min = 0.0;
    double max = 0.0;
    int n_rows = 0;      ///< rows entering the statistics
    int n_excluded = 0;  ///< rows skipped via exclude_from_inflation
};

InflationStats baseline_inflation_stats(const std::vector<CreditLedgerRow>& rows);

}  // namespace reddsc
