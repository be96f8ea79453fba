#pragma once

#include <filesystem>

#include "reddsc/panel.hpp"

namespace reddsc {

/// Loads a panel set from the three input files.
///
/// sites file       site_id,country,role,area_ha,year,cum_defor_ha,buffer_cum_defor_ha
///                  (long format, one row per site-year, role is project|donor)
/// covariates file  site_id,covariate_name,value (optional; pass "" to skip)
/// meta file        project_id,country,start_year,validation_end_year,
///                  expected_credits,issued_credits,baseline_raw_ha,baseline_correct_ha
///
/// The returned set satisfies every type invariant; anything else throws.
PanelSet load_panels(const std::filesystem::path& sites_csv,
                     const std::filesystem::path& covariates_csv,
                     const std::filesystem::path& meta_csv);

/// Writes a panel set back out in the exact ingestion schema. load_panels on
/// the emitted files reproduces an identical PanelSet.
void write_panels(const PanelSet& set,
                  const std::filesystem::path& sites_csv,
                  const std::filesystem::path& covariates_csv,
                  const std::filesystem::path& meta_csv);

}  // namespace reddsc
