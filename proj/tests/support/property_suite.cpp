#include "support/property_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "reddsc/donor_pool.hpp"
#include "reddsc/inference.hpp"
#include "reddsc/panel_io.hpp"
#include "reddsc/simulate.hpp"
#include "reddsc/solver.hpp"
#include "reddsc/validation.hpp"
#include "support/builders.hpp"

namespace reddsc::testing {

namespace {

struct Instance {
    Scenario scenario;
    FitConfig cfg;
    Window window;
};

/// Random but well-posed scenario: enough training years per donor, mild
/// noise, optional treatment effect small enough to never clamp.
Instance random_instance(std::mt19937_64& rng, bool with_effect) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScenarioSpec spec;
    spec.seed = rng();
    spec.n_donors = 2 + static_cast<int>(unit(rng) * 5);
    spec.first_year = 2000;
    spec.last_year = 2012 + static_cast<int>(unit(rng) * 4);
    spec.effect_start_year = 2008 + static_cast<int>(unit(rng) * 3);
    spec.area_ha = 5'000.0 + 50'000.0 * unit(rng);
    spec.donor_process.base_rate_ha = 5.0 + 40.0 * unit(rng);
    spec.donor_process.trend_ha_per_yr = 2.0 * unit(rng);
    spec.donor_process.noise_scale = 0.1 + 0.5 * unit(rng);
    if (with_effect) spec.treatment_effect_ha_per_yr = -0.2 * spec.donor_process.base_rate_ha * unit(rng);

    Instance inst;
    inst.scenario = generate(spec);
    inst.cfg.train_end_year = spec.effect_start_year - 3;
    inst.cfg.solver_tol = 1e-10;
    inst.cfg.max_iter = 100'000;
    inst.window.train_end_year = inst.cfg.train_end_year;
    inst.window.validation_end_year = spec.effect_start_year - 1;
    return inst;
}

/// Project strictly steeper than every donor: outside the convex hull.
Instance hull_exit_instance(std::mt19937_64& rng) {
    Instance inst = random_instance(rng, false);
    Project& p = inst.scenario.panels.projects.front();
    double steepest = 0.0;
    for (const auto& d : inst.scenario.panels.donors)
        steepest = std::max(steepest, d.series.rbegin()->second);
    double scale = 1.5 * steepest / std::max(1e-9, p.panel.series.rbegin()->second);
    for (auto& [year, v] : p.panel.series) v = std::min(v * scale, p.panel.area_ha);
    return inst;
}

using Check = std::function<void(std::mt19937_64&, int, PropertyResult&)>;

void fail(PropertyResult& r, int case_idx, const std::string& what) {
    if (!r.pass) return;
    r.pass = false;
    std::ostringstream os;
    os << "case " << case_idx << ": " << what;
    r.detail = os.str();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(int cases, std::uint64_t seed) {
    std::vector<PropertyResult> results;

    auto run = [&](const std::string& name, const Check& check) {
        PropertyResult r;
        r.name = name;
        r.cases = cases;
        std::mt19937_64 rng(seed ^ std::hash<std::string>{}(name));
        for (int i = 0; i < cases && r.pass; ++i) check(rng, i, r);
        results.push_back(std::move(r));
    };

    run("solver: simplex feasibility after every fit", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, false);
        const auto& p = inst.scenario.panels.projects.front().panel;
        const auto donors = panel_ptrs(inst.scenario.panels.donors);
        ScFit f = fit_scm(p, donors, inst.cfg);
        double sum = 0.0, wmin = 1.0;
        for (double w : f.weights) {
            sum += w;
            wmin = std::min(wmin, w);
        }
        if (std::abs(sum - 1.0) > inst.cfg.solver_tol * 10)
            fail(r, i, "weights sum to " + std::to_string(sum));
        if (wmin < -inst.cfg.solver_tol) fail(r, i, "negative weight " + std::to_string(wmin));
        // ascm weights may go negative but still sum to one
        ScFit a = fit_ascm(p, donors, inst.cfg);
        double asum = 0.0;
        for (double w : a.weights) asum += w;
        if (std::abs(asum - 1.0) > 1e-6) fail(r, i, "ascm weights sum to " + std::to_string(asum));
    });

    run("solver: scale equivariance", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, false);
        std::uniform_real_distribution<double> cdist(0.1, 50.0);
        const double c = cdist(rng);
        PanelSet scaled = inst.scenario.panels;
        for (auto& pr : scaled.projects) {
            for (auto& [y, v] : pr.panel.series) v *= c;
            pr.panel.area_ha *= c;
        }
        for (auto& d : scaled.donors) {
            for (auto& [y, v] : d.series) v *= c;
            d.area_ha *= c;
        }
        ScFit base = fit_scm(inst.scenario.panels.projects.front().panel,
                             panel_ptrs(inst.scenario.panels.donors), inst.cfg);
        ScFit after = fit_scm(scaled.projects.front().panel, panel_ptrs(scaled.donors), inst.cfg);
        if (max_abs_diff(base.weights, after.weights) > 1e-6)
            fail(r, i, "weights moved under scaling");
        for (const auto& [y, v] : base.fitted_series) {
            if (std::abs(after.fitted_series.at(y) - c * v) >
                1e-6 * std::max(1.0, std::abs(c * v)))
                fail(r, i, "fitted series not scaled by c");
        }
    });

    run("solver: permutation equivariance", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, false);
        const auto& p = inst.scenario.panels.projects.front().panel;
        auto donors = panel_ptrs(inst.scenario.panels.donors);
        ScFit base = fit_scm(p, donors, inst.cfg);
        std::vector<std::size_t> perm(donors.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        std::vector<const SitePanel*> shuffled;
        for (auto k : perm) shuffled.push_back(donors[k]);
        ScFit permuted = fit_scm(p, shuffled, inst.cfg);
        for (std::size_t k = 0; k < perm.size(); ++k) {
            if (std::abs(permuted.weights[k] - base.weights[perm[k]]) > 1e-7)
                fail(r, i, "weights did not permute with the donors");
        }
        for (const auto& [y, v] : base.fitted_series)
            if (std::abs(permuted.fitted_series.at(y) - v) > 1e-6 * std::max(1.0, std::abs(v)))
                fail(r, i, "fitted series changed under donor permutation");
    });

    run("solver: exact convex combinations recovered", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, false);
        const auto& truth = inst.scenario.truth;
        ScFit f = fit_scm(inst.scenario.panels.projects.front().panel,
                          panel_ptrs(inst.scenario.panels.donors), inst.cfg);
        if (max_abs_diff(f.weights, truth.weights_true) > 1e-6)
            fail(r, i, "weight error " +
                           std::to_string(max_abs_diff(f.weights, truth.weights_true)));
    });

    run("validation: max-gap ratio dominates the final-year ratio",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = i % 2 == 0 ? hull_exit_instance(rng) : random_instance(rng, true);
            const auto& project = inst.scenario.panels.projects.front().panel;
            ScFit f = fit_scm(project, panel_ptrs(inst.scenario.panels.donors), inst.cfg);
            const double final_defor = series_at(project.series, inst.window.validation_end_year);
            if (final_defor <= 0.0) return;
            auto fy = final_year_area_test(f, project, inst.window);
            auto mg = max_gap_ratio_test(f, project, inst.window);
            if (mg.ratio + 1e-12 < std::abs(fy.diff_ha) / final_defor)
                fail(r, i, "max-gap ratio below final-year ratio");
        });

    run("validation: ratio tests invariant under joint scaling",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = random_instance(rng, true);
            std::uniform_real_distribution<double> cdist(0.1, 50.0);
            const double c = cdist(rng);
            const auto& project = inst.scenario.panels.projects.front().panel;
            ScFit f = fit_scm(project, panel_ptrs(inst.scenario.panels.donors), inst.cfg);
            auto mg = max_gap_ratio_test(f, project, inst.window);
            auto rm = rmspe_ratio_test(f, project, inst.window);
            auto fy = final_year_area_test(f, project, inst.window);

            SitePanel scaled_project = project;
            scaled_project.area_ha *= c;
            for (auto& [y, v] : scaled_project.series) v *= c;
            ScFit scaled_fit = f;
            for (auto& [y, v] : scaled_fit.fitted_series) v *= c;
            auto mg2 = max_gap_ratio_test(scaled_fit, scaled_project, inst.window);
            auto rm2 = rmspe_ratio_test(scaled_fit, scaled_project, inst.window);
            auto fy2 = final_year_area_test(scaled_fit, scaled_project, inst.window);

            auto close = [](double a, double b) {
                if (std::isinf(a) || std::isinf(b)) return std::isinf(a) && std::isinf(b);
                return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
            };
            if (!close(mg.ratio, mg2.ratio) || mg.pass != mg2.pass)
                fail(r, i, "max-gap ratio changed under scaling");
            if (!close(rm.ratio, rm2.ratio) || rm.pass != rm2.pass)
                fail(r, i, "RMSPE ratio changed under scaling");
            if (fy.pass != fy2.pass) fail(r, i, "final-year pass flipped under joint scaling");
        });

    run("validation: worsening the validation fit cannot rescue the RMSPE test",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = i % 2 == 0 ? hull_exit_instance(rng) : random_instance(rng, true);
            const auto& project = inst.scenario.panels.projects.front().panel;
            ScFit f = fit_scm(project, panel_ptrs(inst.scenario.panels.donors), inst.cfg);
            auto before = rmspe_ratio_test(f, project, inst.window);
            std::uniform_real_distribution<double> offset(-100.0, 100.0);
            ScFit worse = f;
            const double c = offset(rng);
            for (auto& [y, v] : worse.fitted_series)
                if (y > inst.window.train_end_year && y <= inst.window.validation_end_year) v += c;
            auto after = rmspe_ratio_test(worse, project, inst.window);
            if (after.rmspe_valid < before.rmspe_valid) return;  // offset happened to improve the fit
            if (before.rmspe_train > 0.0 && after.ratio + 1e-12 < before.ratio)
                fail(r, i, "ratio fell although the validation RMSPE grew");
            if (!before.pass && after.pass)
                fail(r, i, "a worse validation fit flipped the test to pass");
        });

    run("inference: jackknife+ bands are ordered", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = i % 2 == 0 ? hull_exit_instance(rng) : random_instance(rng, true);
        const auto& project = inst.scenario.panels.projects.front();
        const auto donors = panel_ptrs(inst.scenario.panels.donors);
        if (donors.size() < 3) return;
        JackknifeBands bands =
            jackknife_plus_bands(project.panel, project.meta, donors, inst.cfg);
        for (const auto& [y, lo] : bands.lower)
            if (lo > bands.upper.at(y) + 1e-9) fail(r, i, "lower band above upper band");
    });

    run("inference: ATT is linear in the gap scale", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, true);
        std::uniform_real_distribution<double> cdist(0.1, 20.0);
        const double c = cdist(rng);
        const auto& project = inst.scenario.panels.projects.front();
        ScFit f = fit_scm(project.panel, panel_ptrs(inst.scenario.panels.donors), inst.cfg);
        AttResult base = att(f, project.panel, project.meta);
        SitePanel scaled = project.panel;
        for (auto& [y, v] : scaled.series) v *= c;
        scaled.area_ha *= c;
        ScFit sf = f;
        for (auto& [y, v] : sf.fitted_series) v *= c;
        AttResult after = att(sf, scaled, project.meta);
        if (std::abs(after.att - c * base.att) > 1e-9 * std::max(1.0, std::abs(c * base.att)))
            fail(r, i, "ATT not linear under gap scaling");
    });

    run("inference: reversal count symmetric in the filter states",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            std::uniform_real_distribution<double> v(-100.0, 100.0);
            std::vector<SensitivityRow> rows(10);
            for (auto& row : rows) {
                row.att_without = v(rng);
                row.att_with = v(rng);
                if (row.att_with != 0.0)
                    row.diff_pct = sensitivity_diff_pct(row.att_without, row.att_with);
            }
            auto swapped = rows;
            for (auto& row : swapped) {
                std::swap(row.att_with, row.att_without);
                row.diff_pct.reset();
                if (row.att_with != 0.0)
                    row.diff_pct = sensitivity_diff_pct(row.att_without, row.att_with);
            }
            if (summarize_sensitivity(rows).sign_reversals !=
                summarize_sensitivity(swapped).sign_reversals)
                fail(r, i, "sign-reversal count changed when filter states swapped");
        });

    run("donor filter: selections nest along the tolerance ladder",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = random_instance(rng, false);
            const auto& project = inst.scenario.panels.projects.front();
            const auto pool = panel_ptrs(inst.scenario.panels.donors);
            std::vector<std::string> previous;
            for (double tol : {0.05, 0.1, 0.3, 0.6, 1.0}) {
                FilterConfig cfg;
                cfg.tolerance_ladder = {tol};
                cfg.min_donors = 1;
                std::vector<std::string> selected;
                try {
                    DonorSelection sel = filter_donors(project.panel, project.meta, pool, cfg);
                    if (!sel.insufficient_donors) selected = sel.selected;
                } catch (const ZeroProjectBuffer&) {
                    return;
                }
                for (const auto& id : previous)
                    if (std::find(selected.begin(), selected.end(), id) == selected.end())
                        fail(r, i, "tighter selection not contained in looser one");
                previous = selected;
            }
        });

    run("panel: CSV round-trip reproduces the set", [](std::mt19937_64& rng, int i, PropertyResult& r) {
        Instance inst = random_instance(rng, true);
        inst.scenario.panels.projects.front().panel.covariates["elevation"] = 123.456;
        TempDir dir("prop-roundtrip");
        const auto sites = dir.path() / "sites.csv";
        const auto covs = dir.path() / "covariates.csv";
        const auto meta = dir.path() / "meta.csv";
        write_panels(inst.scenario.panels, sites, covs, meta);
        PanelSet loaded = load_panels(sites, covs, meta);
        if (!(loaded == inst.scenario.panels)) fail(r, i, "round-tripped set differs");
    });

    run("panel: increments compose with cumulative sums to the identity",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = random_instance(rng, true);
            for (const auto& d : inst.scenario.panels.donors) {
                YearSeries inc = annual_increments(d);
                YearSeries back =
                    cumulative_from_increments(first_year(d.series), d.series.begin()->second, inc);
                for (const auto& [y, v] : d.series)
                    if (std::abs(back.at(y) - v) > 1e-9 * std::max(1.0, std::abs(v)))
                        fail(r, i, "cumsum(increments) != series");
            }
        });

    run("solver: ridge fit approaches the simplex fit as lambda grows",
        [](std::mt19937_64& rng, int i, PropertyResult& r) {
            Instance inst = hull_exit_instance(rng);
            const auto& project = inst.scenario.panels.projects.front().panel;
            const auto donors = panel_ptrs(inst.scenario.panels.donors);
            ScFit scm = fit_scm(project, donors, inst.cfg);
            double scale = 0.0;
            for (const auto& d : inst.scenario.panels.donors)
                scale = std::max(scale, d.series.rbegin()->second);
            double prev = std::numeric_limits<double>::infinity();
            for (int decade = 0; decade <= 6; ++decade) {
                FitConfig cfg = inst.cfg;
                cfg.ridge_lambda = scale * scale * std::pow(10.0, decade - 3);
                ScFit a = fit_ascm(project, donors, cfg);
                double dist = 0.0;
                for (const auto& [y, v] : a.fitted_series)
                    dist = std::max(dist, std::abs(v - scm.fitted_series.at(y)));
                if (dist > prev * (1.0 + 1e-9) + 1e-9)
                    fail(r, i, "sup-norm distance grew along the lambda grid");
                prev = dist;
            }
        });

    return results;
}

}  // namespace reddsc::testing
