#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "reddsc/bias.hpp"
#include "reddsc/credits.hpp"
#include "reddsc/donor_pool.hpp"
#include "reddsc/inference.hpp"
#include "reddsc/solver.hpp"
#include "reddsc/validation.hpp"

namespace reddsc {

/// Fully resolved batch configuration. Serialized into the output directory
/// on every run so results stay reproducible.
struct RunConfig {
    std::filesystem::path sites_csv;
    std::filesystem::path covariates_csv;  ///< optional, empty to skip
    std::filesystem::path meta_csv;
    std::filesystem::path split_overrides_csv;  ///< optional: project_id,train_end_year
    std::filesystem::path avoided_csv;  ///< optional external avoided-deforestation input
    std::vector<Method> methods{Method::scm};
    FilterConfig filter;
    FitConfig fit;
    ValidationThresholds thresholds;
    std::optional<BiasModel> bias;  ///< applied to reported gaps and ATT when set
    std::filesystem::path out_dir;
    int workers = 1;
};

/// Files written by run_pipeline into cfg.out_dir.
struct ReportPaths {
    std::filesystem::path run_config_json = "run_config.json";
    std::filesystem::path summary_json = "summary.json";
    std::filesystem::path validation_final_year = "validation_final_year.csv";
    std::filesystem::path validation_rmspe_ratio = "validation_rmspe_ratio.csv";
    std::filesystem::path validation_max_gap = "validation_max_gap.csv";
    std::filesystem::path validation_detail = "validation_detail.csv";
    std::filesystem::path att = "att.csv";
    std::filesystem::path sensitivity = "att_filter_sensitivity.csv";
    std::filesystem::path gap_series = "gap_series.csv";
    std::filesystem::path counterfactual_series = "counterfactual_series.csv";
    std::filesystem::path weights = "weights.csv";
    std::filesystem::path credit_ledger = "credit_ledger.csv";
    std::filesystem::path credit_percent_real = "credit_percent_real.csv";
    std::filesystem::path credit_ledger_full = "credit_ledger_full.csv";
};

SplitPlan load_split_overrides(const std::filesystem::path& csv);

/// project_id,avoided_ha
std::vector<std::pair<std::string, double>> load_avoided(const std::filesystem::path& csv);

/// Ingest, fit, validate, infer, account, and write every report file.
/// Per-project issues become flagged rows; unrecoverable errors throw.
void run_pipeline(const RunConfig& cfg);

// ---- individual stages, reusable from the CLI ----

void write_validation_reports(const BatchValidation& batch, const RunConfig& cfg);
void write_att_reports(const PanelSet& set, const RunConfig& cfg);
void write_sensitivity_report(const SensitivityTable& table, const RunConfig& cfg);
void write_credit_reports(const std::vector<CreditLedgerRow>& rows, const RunConfig& cfg);

/// Builds credit inputs from project metadata plus avoided hectares, either
/// supplied externally or derived from fitted gaps (final-year cumulative
/// avoided deforestation, floored at zero).
std::vector<CreditInputRow> credit_inputs_from_meta(
    const PanelSet& set, const std::vector<std::pair<std::string, double>>& avoided);

}  // namespace reddsc
