#pragma once

#include <map>
#include <string>
#include <vector>

#include "reddsc/errors.hpp"

namespace reddsc {

using Year = int;

/// Calendar-year indexed series. Values are cumulative hectares since the
/// first year of record.
using YearSeries = std::map<Year, double>;

/// One site: a project area or a donor candidate.
struct SitePanel {
    std::string site_id;
    std::string country;
    double area_ha = 0.0;
    YearSeries series;         ///< cumulative deforestation inside the site
    YearSeries buffer_series;  ///< cumulative deforestation in the surrounding buffer zone
    std::map<std::string, double> covariates;

    friend bool operator==(const SitePanel&, const SitePanel&) = default;
};

/// Registry metadata for one project.
struct ProjectMeta {
    std::string project_id;
    std::string country;
    Year start_year = 0;
    Year validation_end_year = 0;   ///< end of the pre-treatment validation window
    double expected_credits = 0.0;  ///< Mg CO2, ex ante
    double issued_credits = 0.0;    ///< Mg CO2, ex post
    double baseline_raw_ha = 0.0;     ///< baseline incl. pre-start deforestation, as published
    double baseline_correct_ha = 0.0; ///< baseline restricted to post-start years

    friend bool operator==(const ProjectMeta&, const ProjectMeta&) = default;
};

struct Project {
    SitePanel panel;
    ProjectMeta meta;

    friend bool operator==(const Project&, const Project&) = default;
};

/// Immutable bundle of projects and donor candidates. Safe to share across
/// concurrent fits once constructed.
struct PanelSet {
    std::vector<Project> projects;
    std::vector<SitePanel> donors;

    std::vector<const SitePanel*> donors_in(const std::string& country) const;
    const Project* find_project(const std::string& project_id) const;

    friend bool operator==(const PanelSet&, const PanelSet&) = default;
};

// ---- series helpers ----

Year first_year(const YearSeries& s);
Year last_year(const YearSeries& s);

/// Value at `year`; throws YearOutOfDomain when absent.
double series_at(const YearSeries& s, Year year);

/// increments[y] = series[y] - series[y-1] for every year after the first.
YearSeries annual_increments(const SitePanel& panel);

/// Inverse of annual_increments given the first record (year, value).
YearSeries cumulative_from_increments(Year first, double first_value, const YearSeries& increments);

// ---- invariant checks ----

/// Contiguous years, nondecreasing cumulative values, site series bounded by
/// area, buffer sharing the year domain. Throws the matching error.
void validate_panel(const SitePanel& panel);

/// Site-id uniqueness, per-project meta invariants, donor availability.
void validate_panel_set(const PanelSet& set);

}  // namespace reddsc
