#include "reddsc/donor_pool.hpp"

#include <algorithm>
#include <cmath>

namespace reddsc {

void validate_filter_config(const FilterConfig& cfg) {
    if (cfg.min_donors <= 0) throw InvalidConfig("min_donors must be positive");
    if (cfg.tolerance_ladder.empty()) throw InvalidConfig("tolerance ladder must not be empty");
    double prev = 0.0;
    for (double t : cfg.tolerance_ladder) {
        if (!(t > prev && t <= 1.0))
            throw InvalidConfig("tolerance ladder must be strictly increasing within (0, 1]");
        prev = t;
    }
}

DonorSelection filter_donors(const SitePanel& project, const ProjectMeta& meta,
                             const std::vector<const SitePanel*>& pool,
                             const FilterConfig& cfg) {
    if (pool.empty()) throw EmptyPool("no donor candidates for project '" + meta.project_id + "'");

    DonorSelection sel;
    sel.project_id = meta.project_id;
    sel.pool_size_before = static_cast<int>(pool.size());

    auto select_all = [&] {
        for (const auto* d : pool) sel.selected.push_back(d->site_id);
        sel.pool_size_after = sel.pool_size_before;
    };

    if (!cfg.enabled) {
        select_all();
        return sel;
    }
    validate_filter_config(cfg);

    const Year ref_year = meta.start_year - 1;
    const double b_proj = series_at(project.buffer_series, ref_year);
    if (b_proj == 0.0) throw ZeroProjectBuffer(meta.project_id);

    // Relative deviation of total pre-start buffer deforestation; donors
    // without the reference year never qualify.
    std::vector<double> deviation(pool.size(), std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        auto it = pool[i]->buffer_series.find(ref_year);
        if (it != pool[i]->buffer_series.end())
            deviation[i] = std::abs(it->second - b_proj) / b_proj;
    }

    for (double tol : cfg.tolerance_ladder) {
        std::vector<std::string> picked;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (deviation[i] <= tol) picked.push_back(pool[i]->site_id);
        if (static_cast<int>(picked.size()) >= cfg.min_donors) {
            sel.selected = std::move(picked);
            sel.tolerance_used = tol;
            sel.pool_size_after = static_cast<int>(sel.selected.size());
            return sel;
        }
    }

    // Ladder exhausted: fall back to the full pool, flagged.
    select_all();
    sel.tolerance_used = cfg.tolerance_ladder.back();
    sel.insufficient_donors = true;
    return sel;
}

std::vector<const SitePanel*> country_pool(const PanelSet& set, const Project& project) {
    std::vector<const SitePanel*> out;
    const Year y0 = first_year(project.panel.series);
    const Year y1 = last_year(project.panel.series);
    for (const auto* d : set.donors_in(project.panel.country)) {
        if (first_year(d->series) <= y0 && last_year(d->series) >= y1) out.push_back(d);
    }
    return out;
}

std::vector<const SitePanel*> select_panels(const std::vector<const SitePanel*>& pool,
                                            const DonorSelection& selection) {
    std::vector<const SitePanel*> out;
    for (const auto* d : pool)
        if (std::find(selection.selected.begin(), selection.selected.end(), d->site_id) !=
            selection.selected.end())
            out.push_back(d);
    return out;
}

}  // namespace reddsc
