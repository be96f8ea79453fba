#include "reddsc/inference.hpp"

#include <algorithm>
#include <cmath>

#include "reddsc/parallel.hpp"

namespace reddsc {

std::string_view filter_state_name(FilterState s) {
    return s == FilterState::with_filter ? "with" : "without";
}

AttResult att(const ScFit& fit, const SitePanel& project, const ProjectMeta& meta) {
    AttResult out;
    out.project_id = meta.project_id;
    out.method = fit.method;
    double sum = 0.0;
    for (const auto& [year, value] : project.series) {
        if (year < meta.start_year) continue;
        double gap = value - series_at(fit.fitted_series, year);
        out.gap_series[year] = gap;
        sum += gap;
    }
    if (out.gap_series.empty())
        throw NoPostYears("project '" + meta.project_id + "' has no years at or after " +
                          std::to_string(meta.start_year));
    out.att = sum / static_cast<double>(out.gap_series.size());
    return out;
}

namespace {

/// Jackknife+ order statistics: the floor(a(n+1))-th smallest for the lower
/// end and the ceil((1-a)(n+1))-th smallest for the upper end, saturating at
/// the extremes when n is small.
double lower_order_stat(std::vector<double> v, double alpha_half) {
    const int n = static_cast<int>(v.size());
    int k = static_cast<int>(std::floor(alpha_half * (n + 1)));
    k = std::clamp(k, 1, n);
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[static_cast<std::size_t>(k - 1)];
}

double upper_order_stat(std::vector<double> v, double alpha_half) {
    const int n = static_cast<int>(v.size());
    int k = static_cast<int>(std::ceil((1.0 - alpha_half) * (n + 1)));
    k = std::clamp(k, 1, n);
    std::nth_element(v.begin(), v.begin() + (k - 1), v.end());
    return v[static_cast<std::size_t>(k - 1)];
}

double pre_treatment_rmspe(const ScFit& fit, const SitePanel& project, Year start_year) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [year, value] : project.series) {
        if (year >= start_year) continue;
        double gap = value - series_at(fit.fitted_series, year);
        sum += gap * gap;
        ++n;
    }
    return n > 0 ? std::sqrt(sum / n) : 0.0;
}

}  // namespace

JackknifeBands jackknife_plus_bands(const SitePanel& project, const ProjectMeta& meta,
                                    const std::vector<const SitePanel*>& donors,
                                    const FitConfig& cfg, double alpha) {
    const int n = static_cast<int>(donors.size());
    if (n < 3)
        throw TooFewDonors("jackknife+ needs at least 3 donors, got " + std::to_string(n));

    std::vector<Year> post_years;
    for (const auto& [year, value] : project.series)
        if (year >= meta.start_year) post_years.push_back(year);
    if (post_years.empty()) throw NoPostYears("no post-treatment years");

    // One leave-one-donor-out refit per donor; pre-treatment RMSPE is the
    // conformity score attached to that refit's gap predictions.
    std::vector<std::vector<double>> loo_gaps(static_cast<std::size_t>(n));
    std::vector<double> scores(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        std::vector<const SitePanel*> rest;
        for (int i = 0; i < n; ++i)
            if (i != j) rest.push_back(donors[static_cast<std::size_t>(i)]);
        ScFit f = fit(project, rest, cfg);
        scores[static_cast<std::size_t>(j)] = pre_treatment_rmspe(f, project, meta.start_year);
        auto& gaps = loo_gaps[static_cast<std::size_t>(j)];
        gaps.reserve(post_years.size());
        for (Year y : post_years)
            gaps.push_back(series_at(project.series, y) - series_at(f.fitted_series, y));
    }

    JackknifeBands bands;
    const double alpha_half = alpha / 2.0;
    for (std::size_t yi = 0; yi < post_years.size(); ++yi) {
        std::vector<double> lows(static_cast<std::size_t>(n));
        std::vector<double> highs(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            lows[static_cast<std::size_t>(j)] =
                loo_gaps[static_cast<std::size_t>(j)][yi] - scores[static_cast<std::size_t>(j)];
            highs[static_cast<std::size_t>(j)] =
                loo_gaps[static_cast<std::size_t>(j)][yi] + scores[static_cast<std::size_t>(j)];
        }
        bands.lower[post_years[yi]] = lower_order_stat(lows, alpha_half);
        bands.upper[post_years[yi]] = upper_order_stat(highs, alpha_half);
    }
    return bands;
}

double sensitivity_diff_pct(double att_without, double att_with) {
    return 100.0 * (att_with - att_without) / att_with;
}

SensitivityTable sensitivity_table(const PanelSet& set, const FitConfig& fit_cfg,
                                   const FilterConfig& filter_cfg, const SplitPlan& splits,
                                   int workers) {
    SensitivityTable out;
    out.rows.resize(set.projects.size());

    parallel_for(set.projects.size(), workers, [&](std::size_t pi) {
        const Project& project = set.projects[pi];
        SensitivityRow& row = out.rows[pi];
        row.project_id = project.meta.project_id;
        row.country = project.meta.country;

        const Window window = split_for(project, splits);
        FitConfig cfg = fit_cfg;
        cfg.train_end_year = window.train_end_year;

        std::vector<const SitePanel*> pool = country_pool(set, project);
        auto att_for = [&](const std::vector<const SitePanel*>& donors) {
            return att(fit(project.panel, donors, cfg), project.panel, project.meta).att;
        };

        row.att_without = att_for(pool);
        // The comparison is between the two filter states, so the "with" run
        // always applies the filter even if the run-level flag is off.
        FilterConfig with_cfg = filter_cfg;
        with_cfg.enabled = true;
        std::vector<const SitePanel*> filtered = pool;
        try {
            DonorSelection sel = filter_donors(project.panel, project.meta, pool, with_cfg);
            filtered = select_panels(pool, sel);
        } catch (const ZeroProjectBuffer&) {
            // similarity undefined: the filtered run degenerates to the full pool
        }
        row.att_with = att_for(filtered);
        if (row.att_with != 0.0)
            row.diff_pct = sensitivity_diff_pct(row.att_without, row.att_with);
    });

    out.summary = summarize_sensitivity(out.rows);
    return out;
}

SensitivitySummary summarize_sensitivity(const std::vector<SensitivityRow>& rows) {
    SensitivitySummary s;
    s.n_rows = static_cast<int>(rows.size());
    std::vector<double> abs_diffs;
    for (const auto& r : rows) {
        if (r.att_with * r.att_without < 0.0) ++s.sign_reversals;
        if (r.diff_pct) {
            abs_diffs.push_back(std::abs(*r.diff_pct));
            ++s.n_defined;
        }
    }
    if (!abs_diffs.empty()) {
        double sum = 0.0;
        for (double d : abs_diffs) sum += d;
        s.mean_abs_diff_pct = sum / static_cast<double>(abs_diffs.size());
        std::sort(abs_diffs.begin(), abs_diffs.end());
        const std::size_t mid = abs_diffs.size() / 2;
        s.median_abs_diff_pct = (abs_diffs.size() % 2 == 1)
                                    ? abs_diffs[mid]
                                    : 0.5 * (abs_diffs[mid - 1] + abs_diffs[mid]);
    }
    return s;
}

}  // namespace reddsc
