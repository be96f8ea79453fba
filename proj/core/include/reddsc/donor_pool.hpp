#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reddsc/panel.hpp"

namespace reddsc {

/// Escalating tolerance ladder for buffer-deforestation similarity.
struct FilterConfig {
    std::vector<double> tolerance_ladder{0.10, 0.20, 0.30};  ///< strictly increasing, in (0, 1]
    int min_donors = 4;
    bool enabled = true;
};

/// Throws InvalidConfig unless the ladder is strictly increasing in (0, 1]
/// and min_donors is positive.
void validate_filter_config(const FilterConfig& cfg);

struct DonorSelection {
    std::string project_id;
    std::vector<std::string> selected;       ///< site ids, pool order preserved
    std::optional<double> tolerance_used;    ///< unset when the filter is disabled
    int pool_size_before = 0;
    int pool_size_after = 0;
    bool insufficient_donors = false;  ///< ladder exhausted; full pool returned
};

/// Keeps donors whose cumulative buffer deforestation at start_year - 1 lies
/// within the smallest ladder tolerance (relative deviation, inclusive) that
/// yields at least min_donors. Donors lacking that year are never selected.
///
/// Throws EmptyPool on an empty pool and ZeroProjectBuffer when the project
/// buffer total is zero (the caller should rerun with the filter disabled).
DonorSelection filter_donors(const SitePanel& project, const ProjectMeta& meta,
                             const std::vector<const SitePanel*>& pool,
                             const FilterConfig& cfg);

/// Same-country donors whose series cover the project's full year domain.
std::vector<const SitePanel*> country_pool(const PanelSet& set, const Project& project);

/// Resolves a donor selection back to panels, preserving pool order.
std::vector<const SitePanel*> select_panels(const std::vector<const SitePanel*>& pool,
                                            const DonorSelection& selection);

}  // namespace reddsc
