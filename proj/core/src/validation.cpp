#include "reddsc/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reddsc/parallel.hpp"

namespace reddsc {

namespace {

std::vector<Year> window_years(const SitePanel& project, Year from, Year to) {
    std::vector<Year> years;
    for (const auto& [year, value] : project.series)
        if (year >= from && year <= to) years.push_back(year);
    return years;
}

double gap_at(const ScFit& fit, const SitePanel& project, Year year) {
    return series_at(project.series, year) - series_at(fit.fitted_series, year);
}

void check_window(const SitePanel& project, const Window& window) {
    if (window.train_end_year >= window.validation_end_year)
        throw WindowOutOfRange("validation window (" + std::to_string(window.train_end_year) +
                               ", " + std::to_string(window.validation_end_year) + "] is empty");
    if (window.validation_end_year > last_year(project.series) ||
        window.train_end_year < first_year(project.series))
        throw WindowOutOfRange("window (" + std::to_string(window.train_end_year) + ", " +
                               std::to_string(window.validation_end_year) +
                               "] lies outside the series of '" + project.site_id + "'");
}

double rmspe(const ScFit& fit, const SitePanel& project, const std::vector<Year>& years) {
    if (years.empty()) throw EmptyWindow("RMSPE over an empty window");
    double sum = 0.0;
    for (Year y : years) {
        double g = gap_at(fit, project, y);
        sum += g * g;
    }
    return std::sqrt(sum / static_cast<double>(years.size()));
}

}  // namespace

FinalYearAreaResult final_year_area_test(const ScFit& fit, const SitePanel& project,
                                         const Window& window,
                                         const ValidationThresholds& thresholds) {
    check_window(project, window);
    FinalYearAreaResult r;
    r.diff_ha = gap_at(fit, project, window.validation_end_year);
    r.diff_pct_area = 100.0 * r.diff_ha / project.area_ha;
    r.pass = std::abs(r.diff_pct_area) <= thresholds.final_year_pct_area;
    return r;
}

MaxGapRatioResult max_gap_ratio_test(const ScFit& fit, const SitePanel& project,
                                     const Window& window,
                                     const ValidationThresholds& thresholds) {
    check_window(project, window);
    MaxGapRatioResult r;
    const auto years = window_years(project, window.train_end_year + 1, window.validation_end_year);
    if (years.empty()) throw EmptyWindow("no validation years in the window");
    for (Year y : years) r.max_abs_diff_ha = std::max(r.max_abs_diff_ha, std::abs(gap_at(fit, project, y)));
    const double final_defor = series_at(project.series, window.validation_end_year);
    if (final_defor <= 0.0) {
        // Degenerate low-deforestation case: the ratio is undefined, reported
        // as a flagged automatic fail so batch summaries stay computable.
        r.zero_final_deforestation = true;
        r.ratio = std::numeric_limits<double>::infinity();
        r.pass = false;
        return r;
    }
    r.ratio = r.max_abs_diff_ha / final_defor;
    r.pass = r.ratio < thresholds.max_gap_ratio;
    return r;
}

RmspeRatioResult rmspe_ratio_test(const ScFit& fit, const SitePanel& project,
                                  const Window& window,
                                  const ValidationThresholds& thresholds) {
    check_window(project, window);
    const auto train = window_years(project, first_year(project.series), window.train_end_year);
    const auto valid = window_years(project, window.train_end_year + 1, window.validation_end_year);
    RmspeRatioResult r;
    r.rmspe_train = rmspe(fit, project, train);
    r.rmspe_valid = rmspe(fit, project, valid);
    if (r.rmspe_train == 0.0 && r.rmspe_valid == 0.0) {
        r.perfect_fit = true;
        r.ratio = 0.0;
        r.pass = true;
        return r;
    }
    if (r.rmspe_train == 0.0) {
        r.ratio = std::numeric_limits<double>::infinity();
        r.pass = false;
        return r;
    }
    r.ratio = r.rmspe_valid / r.rmspe_train;
    r.pass = r.ratio <= thresholds.rmspe_ratio;
    return r;
}

Window split_for(const Project& project, const SplitPlan& plan) {
    Window w;
    w.validation_end_year = project.meta.validation_end_year;
    auto it = plan.train_end_overrides.find(project.meta.project_id);
    if (it != plan.train_end_overrides.end()) {
        w.train_end_year = it->second;
    } else {
        const Year y0 = first_year(project.panel.series);
        w.train_end_year = y0 + (w.validation_end_year - y0) / 2;
    }
    return w;
}

BatchValidation validate_all(const PanelSet& set, const std::vector<Method>& methods,
                             const FitConfig& fit_cfg, const FilterConfig& filter_cfg,
                             const SplitPlan& splits, const ValidationThresholds& thresholds,
                             int workers) {
    BatchValidation out;
    out.reports.resize(set.projects.size() * methods.size());

    parallel_for(set.projects.size(), workers, [&](std::size_t pi) {
        const Project& project = set.projects[pi];
        const Window window = split_for(project, splits);

        std::vector<const SitePanel*> pool = country_pool(set, project);
        std::vector<const SitePanel*> donors = pool;
        std::optional<double> tolerance;
        bool fell_back = false;
        std::string pool_error;
        try {
            DonorSelection sel = filter_donors(project.panel, project.meta, pool, filter_cfg);
            donors = select_panels(pool, sel);
            tolerance = sel.tolerance_used;
            fell_back = sel.insufficient_donors;
        } catch (const ZeroProjectBuffer&) {
            fell_back = true;  // similarity undefined: fall back to the full pool
        } catch (const Error& e) {
            pool_error = e.what();
        }

        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            ValidationReport& rep = out.reports[pi * methods.size() + mi];
            rep.project_id = project.meta.project_id;
            rep.country = project.meta.country;
            rep.method = methods[mi];
            rep.window = window;
            rep.filter_tolerance = tolerance;
            rep.filter_fell_back = fell_back;
            rep.donors_used = static_cast<int>(donors.size());
            if (!pool_error.empty()) {
                rep.fit_failed = true;
                rep.error = pool_error;
                continue;
            }
            try {
                FitConfig cfg = fit_cfg;
                cfg.method = methods[mi];
                cfg.train_end_year = window.train_end_year;
                ScFit f = fit(project.panel, donors, cfg);
                rep.degenerate_training = f.degenerate_training;
                rep.final_year = final_year_area_test(f, project.panel, window, thresholds);
                rep.max_gap = max_gap_ratio_test(f, project.panel, window, thresholds);
                rep.rmspe = rmspe_ratio_test(f, project.panel, window, thresholds);
            } catch (const Error& e) {
                rep.fit_failed = true;
                rep.error = e.what();
            }
        }
    });

    out.summary = summarize_validation(out.reports);
    return out;
}

ValidationSummary summarize_validation(const std::vector<ValidationReport>& reports) {
    ValidationSummary s;
    std::map<std::string, int> methods_passing_both;
    std::map<std::string, int> methods_seen;
    for (const auto& r : reports) {
        MethodCounts& c = s.by_method[r.method];
        ++c.n;
        ++methods_seen[r.project_id];
        if (r.fit_failed) continue;
        if (r.final_year.pass) ++c.final_year_pass;
        if (r.max_gap.pass) ++c.max_gap_pass;
        if (r.rmspe.pass) ++c.rmspe_pass;
        if (r.max_gap.pass && r.rmspe.pass) {
            ++c.both_ratio_pass;
            ++methods_passing_both[r.project_id];
        }
    }
    for (auto& [method, c] : s.by_method) c.either_ratio_fail = c.n - c.both_ratio_pass;
    s.n_projects = static_cast<int>(methods_seen.size());
    for (const auto& [id, n_pass] : methods_passing_both)
        if (n_pass == methods_seen[id]) ++s.both_ratio_pass_all_methods;
    return s;
}

}  // namespace reddsc
