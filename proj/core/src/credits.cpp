#include "reddsc/credits.hpp"

#include <algorithm>
#include <limits>

namespace reddsc {

double per_hectare_factor(double expected_credits, double baseline_ha) {
    if (!(baseline_ha > 0.0)) throw ZeroBaseline("baseline must be positive");
    return expected_credits / baseline_ha;
}

double offsets_from_sc(double avoided_ha, double per_ha) {
    return avoided_ha * per_ha;
}

PercentReal percent_real(double offsets_sc, double denominator_credits) {
    if (!(denominator_credits > 0.0)) throw ZeroDenominator("credit denominator must be positive");
    PercentReal out;
    out.fraction = offsets_sc / denominator_credits;
    out.over_100 = out.fraction > 1.0;
    return out;
}

CreditLedgerRow compute_ledger_row(const CreditInputRow& in) {
    CreditLedgerRow row;
    row.project_id = in.project_id;
    row.avoided_defor_ha = in.avoided_defor_ha;
    row.baseline_raw_ha = in.baseline_raw_ha;
    row.baseline_correct_ha = in.baseline_correct_ha;
    row.expected_credits = in.expected_credits;
    row.issued_credits = in.issued_credits;
    row.exclude_from_inflation = in.exclude_from_inflation;

    row.per_ha_raw = per_hectare_factor(in.expected_credits, in.baseline_raw_ha);
    row.per_ha_correct = per_hectare_factor(in.expected_credits, in.baseline_correct_ha);
    row.offsets_raw = offsets_from_sc(in.avoided_defor_ha, row.per_ha_raw);
    row.offsets_correct = offsets_from_sc(in.avoided_defor_ha, row.per_ha_correct);
    if (in.expected_credits > 0.0)
        row.pct_real_raw = percent_real(row.offsets_raw, in.expected_credits);
    if (in.issued_credits > 0.0)
        row.pct_real_correct = percent_real(row.offsets_correct, in.issued_credits);
    return row;
}

std::vector<CreditLedgerRow> compute_ledger(const std::vector<CreditInputRow>& inputs) {
    std::vector<CreditLedgerRow> rows;
    rows.reserve(inputs.size());
    for (const auto& in : inputs) rows.push_back(compute_ledger_row(in));
    return rows;
}

LedgerTotals ledger_totals(const std::vector<CreditLedgerRow>& rows) {
    if (rows.empty()) throw Error("ledger_totals needs at least one row");
    LedgerTotals t;
    for (const auto& r : rows) {
        t.total_offsets_raw += r.offsets_raw;
        t.total_offsets_correct += r.offsets_correct;
        t.total_expected += r.expected_credits;
        t.total_issued += r.issued_credits;
    }
    if (t.total_expected > 0.0)
        t.pct_real_raw = percent_real(t.total_offsets_raw, t.total_expected);
    if (t.total_issued > 0.0)
        t.pct_real_correct = percent_real(t.total_offsets_correct, t.total_issued);
    if (t.pct_real_raw && t.pct_real_correct && t.pct_real_raw->fraction > 0.0)
        t.relative_increase = t.pct_real_correct->fraction / t.pct_real_raw->fraction - 1.0;
    return t;
}

InflationStats baseline_inflation_stats(const std::vector<CreditLedgerRow>& rows) {
    InflationStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& r : rows) {
        if (r.exclude_from_inflation) {
            ++s.n_excluded;
            continue;
        }
        if (!(r.baseline_correct_ha > 0.0)) throw ZeroBaseline("baseline must be positive");
        double inflation = r.baseline_raw_ha / r.baseline_correct_ha - 1.0;
        sum += inflation;
        s.min = std::min(s.min, inflation);
        s.max = std::max(s.max, inflation);
        ++s.n_rows;
    }
    if (s.n_rows == 0) throw Error("no rows enter the inflation statistics");
    s.mean = sum / s.n_rows;
    return s;
}

}  // namespace reddsc
