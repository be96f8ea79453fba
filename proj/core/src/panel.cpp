#include "reddsc/panel.hpp"

#include <algorithm>
#include <set>

namespace reddsc {

std::vector<const SitePanel*> PanelSet::donors_in(const std::string& country) const {
    std::vector<const SitePanel*> out;
    for (const auto& d : donors)
        if (d.country == country) out.push_back(&d);
    return out;
}

const Project* PanelSet::find_project(const std::string& project_id) const {
    for (const auto& p : projects)
        if (p.meta.project_id == project_id) return &p;
    return nullptr;
}

Year first_year(const YearSeries& s) {
    if (s.empty()) throw Error("empty year series");
    return s.begin()->first;
}

Year last_year(const YearSeries& s) {
    if (s.empty()) throw Error("empty year series");
    return s.rbegin()->first;
}

double series_at(const YearSeries& s, Year year) {
    auto it = s.find(year);
    if (it == s.end())
        throw YearOutOfDomain("year " + std::to_string(year) + " outside the series domain", year);
    return it->second;
}

YearSeries annual_increments(const SitePanel& panel) {
    YearSeries out;
    const auto& s = panel.series;
    for (auto it = s.begin(); it != s.end(); ++it) {
        if (it == s.begin()) continue;
        out[it->first] = it->second - std::prev(it)->second;
    }
    return out;
}

YearSeries cumulative_from_increments(Year first, double first_value, const YearSeries& increments) {
    YearSeries out;
    out[first] = first_value;
    double running = first_value;
    for (const auto& [year, inc] : increments) {
        running += inc;
        out[year] = running;
    }
    return out;
}

namespace {

void check_cumulative(const std::string& site_id, const YearSeries& s, double area_ha,
                      bool bound_by_area) {
    if (s.empty()) throw Error("site '" + site_id + "' has an empty series");
    Year prev_year = 0;
    double prev_value = 0.0;
    bool first = true;
    for (const auto& [year, value] : s) {
        if (!first && year != prev_year + 1) throw YearGap(site_id, prev_year + 1);
        if (value < 0.0) throw NonMonotoneSeries(site_id, year);
        if (!first && value < prev_value) throw NonMonotoneSeries(site_id, year);
        if (bound_by_area && value > area_ha) throw SeriesExceedsArea(site_id, year, value, area_ha);
        prev_year = year;
        prev_value = value;
        first = false;
    }
}

}  // namespace

void validate_panel(const SitePanel& panel) {
    if (panel.site_id.empty()) throw Error("site with empty id");
    if (!(panel.area_ha > 0.0))
        throw Error("site '" + panel.site_id + "' must have positive area");
    check_cumulative(panel.site_id, panel.series, panel.area_ha, true);
    check_cumulative(panel.site_id, panel.buffer_series, panel.area_ha, false);
    if (first_year(panel.series) != first_year(panel.buffer_series) ||
        last_year(panel.series) != last_year(panel.buffer_series))
        throw Error("site '" + panel.site_id + "': series and buffer series cover different years");
}

void validate_panel_set(const PanelSet& set) {
    std::set<std::string> ids;
    auto check_id = [&](const std::string& id) {
        if (!ids.insert(id).second) throw DuplicateSiteId(id, "appears more than once in the set");
    };
    for (const auto& p : set.projects) {
        validate_panel(p.panel);
        check_id(p.panel.site_id);
    }
    for (const auto& d : set.donors) {
        validate_panel(d);
        check_id(d.site_id);
    }
    for (const auto& p : set.projects) {
        const auto& m = p.meta;
        const auto& s = p.panel.series;
        if (m.project_id != p.panel.site_id)
            throw InvalidMeta("meta project_id '" + m.project_id + "' does not match site '" +
                              p.panel.site_id + "'");
        if (m.country != p.panel.country)
            throw InvalidMeta("project '" + m.project_id + "': meta country differs from site country");
        if (!(first_year(s) < m.start_year && m.start_year < last_year(s)))
            throw InvalidMeta("project '" + m.project_id +
                              "': start_year must lie strictly inside the series year domain");
        if (!(m.validation_end_year < m.start_year))
            throw InvalidMeta("project '" + m.project_id +
                              "': validation_end_year must precede start_year");
        if (m.validation_end_year <= first_year(s))
            throw InvalidMeta("project '" + m.project_id +
                              "': validation_end_year leaves no training years");
        if (m.expected_credits < 0.0 || m.issued_credits < 0.0)
            throw InvalidMeta("project '" + m.project_id + "': credit quantities must be nonnegative");
        if (m.baseline_raw_ha < 0.0 || m.baseline_correct_ha < 0.0)
            throw InvalidMeta("project '" + m.project_id + "': baselines must be nonnegative");
        if (m.baseline_correct_ha > m.baseline_raw_ha)
            throw InvalidMeta("project '" + m.project_id +
                              "': corrected baseline exceeds the raw baseline");
        if (set.donors_in(p.panel.country).empty())
            throw InvalidMeta("project '" + m.project_id + "': no donors for country '" +
                              p.panel.country + "'");
    }
}

}  // namespace reddsc
