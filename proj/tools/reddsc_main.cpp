#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "reddsc/bias.hpp"
#include "reddsc/csv.hpp"
#include "reddsc/panel_io.hpp"
#include "reddsc/pipeline.hpp"
#include "reddsc/simulate.hpp"

using namespace reddsc;
using nlohmann::json;

namespace {

// Exit codes: 1 usage, 2 ingestion, 3 solver, 4 report writing.
constexpr int kExitUsage = 1;
constexpr int kExitIngest = 2;
constexpr int kExitSolver = 3;
constexpr int kExitReport = 4;

struct CommonOptions {
    RunConfig run;
    std::string method = "scm";
    std::string filter = "on";
    std::string ladder = "0.10,0.20,0.30";
    std::string bias_preset_name;
    double rd = -1.0, rf = -1.0;
    std::optional<double> ridge_lambda;
    std::optional<int> train_end;
    std::uint64_t seed = 0;
};

std::vector<Method> resolve_methods(const std::string& method) {
    if (method == "both") return {Method::ascm, Method::scm};
    return {parse_method(method)};
}

std::vector<double> parse_ladder(const std::string& ladder) {
    std::vector<double> out;
    std::string field;
    std::stringstream ss(ladder);
    while (std::getline(ss, field, ','))
        if (!field.empty()) out.push_back(parse_double(field, "--ladder"));
    return out;
}

void resolve_common(CommonOptions& opt) {
    opt.run.methods = resolve_methods(opt.method);
    opt.run.filter.enabled = (opt.filter == "on");
    opt.run.filter.tolerance_ladder = parse_ladder(opt.ladder);
    opt.run.fit.ridge_lambda = opt.ridge_lambda;
    if (opt.train_end) {
        // A global train-end override applies to every project.
        opt.run.fit.train_end_year = *opt.train_end;
    }
    if (!opt.bias_preset_name.empty()) {
        opt.run.bias = bias_preset(opt.bias_preset_name);
    } else if (opt.rd >= 0.0 || opt.rf >= 0.0) {
        opt.run.bias = BiasModel(opt.rd, opt.rf);
    }
}

void add_input_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--sites", opt.run.sites_csv, "sites CSV (long format)")->required();
    cmd->add_option("--covariates", opt.run.covariates_csv, "covariates CSV");
    cmd->add_option("--meta", opt.run.meta_csv, "project metadata CSV")->required();
}

void add_fit_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--method", opt.method, "scm, ascm, or both")
        ->check(CLI::IsMember({"scm", "ascm", "both"}));
    cmd->add_option("--filter", opt.filter, "donor similarity filter: on or off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--ladder", opt.ladder, "filter tolerance ladder, e.g. 0.10,0.20,0.30");
    cmd->add_option("--min-donors", opt.run.filter.min_donors, "minimum donors per rung");
    cmd->add_option("--split-overrides", opt.run.split_overrides_csv,
                    "CSV project_id,train_end_year with per-project splits");
    cmd->add_option("--train-end", opt.train_end,
                    "global train-end year (overridden per project by --split-overrides)");
    cmd->add_option("--covariate-weight", opt.run.fit.covariate_weight,
                    "weight of standardized covariate rows in the fit");
    cmd->add_option("--ridge-lambda", opt.ridge_lambda,
                    "ridge penalty for ascm (cross-validated when omitted)");
    cmd->add_option("--tol", opt.run.fit.solver_tol, "solver stationarity tolerance");
    cmd->add_option("--max-iter", opt.run.fit.max_iter, "solver iteration cap");
    cmd->add_option("--workers", opt.run.workers, "project-level parallelism");
}

void add_bias_flags(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--bias-preset", opt.bias_preset_name,
                    "named rate pair: mcnicol2018 or hansen-wet-tropics");
    cmd->add_option("--rd", opt.rd, "detection rate");
    cmd->add_option("--rf", opt.rf, "false-alarm rate");
}

void add_out_flag(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--out", opt.run.out_dir, "output directory")->required();
}

int classify(const Error& e) {
    if (dynamic_cast<const SolverDiverged*>(&e) || dynamic_cast<const IllConditioned*>(&e))
        return kExitSolver;
    if (dynamic_cast<const CsvError*>(&e) || dynamic_cast<const InvalidMeta*>(&e) ||
        dynamic_cast<const NonMonotoneSeries*>(&e) || dynamic_cast<const SeriesExceedsArea*>(&e) ||
        dynamic_cast<const YearGap*>(&e) || dynamic_cast<const DuplicateSiteId*>(&e))
        return kExitIngest;
    return kExitReport;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic-control evaluation of avoided-deforestation projects"};
    app.require_subcommand(1);

    CommonOptions opt;

    auto* ingest = app.add_subcommand("ingest", "validate inputs and re-emit normalized panels");
    add_input_flags(ingest, opt);
    add_out_flag(ingest, opt);

    auto* fit_cmd = app.add_subcommand("fit", "fit synthetic controls and write weights");
    add_input_flags(fit_cmd, opt);
    add_fit_flags(fit_cmd, opt);
    add_out_flag(fit_cmd, opt);

    auto* validate = app.add_subcommand("validate", "run the three pre-treatment tests");
    add_input_flags(validate, opt);
    add_fit_flags(validate, opt);
    add_out_flag(validate, opt);

    auto* att_cmd = app.add_subcommand("att", "post-treatment effects with jackknife+ bands");
    add_input_flags(att_cmd, opt);
    add_fit_flags(att_cmd, opt);
    add_bias_flags(att_cmd, opt);
    add_out_flag(att_cmd, opt);

    auto* sens = app.add_subcommand("sensitivity", "compare ATT with and without the donor filter");
    add_input_flags(sens, opt);
    add_fit_flags(sens, opt);
    add_out_flag(sens, opt);

    auto* bias_cmd = app.add_subcommand("bias", "sensor-error arithmetic");
    add_bias_flags(bias_cmd, opt);
    double observed_diff = 0.0, effect = 0.0, baseline = 0.0;
    bool have_diff = false;
    auto* diff_opt = bias_cmd->add_option("--observed-diff", observed_diff,
                                          "observed site difference to correct (ha)");
    bias_cmd->add_option("--effect", effect, "observed effect size (ha/yr)");
    bias_cmd->add_option("--baseline", baseline, "baseline deforestation rate (ha/yr)");

    auto* credits_cmd = app.add_subcommand("credits", "recompute the credit ledger");
    credits_cmd->add_option("--meta", opt.run.meta_csv, "project metadata CSV")->required();
    credits_cmd->add_option("--avoided", opt.run.avoided_csv,
                            "CSV project_id,avoided_ha")->required();
    std::vector<std::string> inflation_excludes;
    credits_cmd->add_option("--exclude", inflation_excludes,
                            "project ids excluded from inflation statistics");
    add_out_flag(credits_cmd, opt);

    auto* simulate_cmd = app.add_subcommand("simulate", "generate panels with known ground truth");
    ScenarioSpec spec;
    simulate_cmd->add_option("--seed", spec.seed, "RNG seed");
    simulate_cmd->add_option("--n-donors", spec.n_donors, "number of donors");
    simulate_cmd->add_option("--first-year", spec.first_year, "first record year");
    simulate_cmd->add_option("--last-year", spec.last_year, "last record year");
    simulate_cmd->add_option("--area", spec.area_ha, "site area (ha)");
    simulate_cmd->add_option("--base-rate", spec.donor_process.base_rate_ha,
                             "base annual deforestation (ha)");
    simulate_cmd->add_option("--trend", spec.donor_process.trend_ha_per_yr, "annual trend (ha)");
    simulate_cmd->add_option("--noise", spec.donor_process.noise_scale, "increment noise scale");
    std::vector<double> true_weights;
    simulate_cmd->add_option("--true-weights", true_weights, "convex donor weights");
    simulate_cmd->add_option("--effect", spec.treatment_effect_ha_per_yr,
                             "treatment effect on increments (ha/yr)");
    simulate_cmd->add_option("--effect-start", spec.effect_start_year, "first treated year");
    std::string sim_bias_preset;
    double sim_rd = -1.0, sim_rf = -1.0;
    simulate_cmd->add_option("--bias-preset", sim_bias_preset, "observe panels through a preset sensor");
    simulate_cmd->add_option("--rd", sim_rd, "sensor detection rate");
    simulate_cmd->add_option("--rf", sim_rf, "sensor false-alarm rate");
    simulate_cmd->add_flag("--stochastic-sensor", spec.stochastic_sensor,
                           "sample detections instead of expected values");
    std::filesystem::path sim_out;
    simulate_cmd->add_option("--out", sim_out, "output directory")->required();

    auto* report = app.add_subcommand("report", "full pipeline: every table plus a run summary");
    add_input_flags(report, opt);
    add_fit_flags(report, opt);
    add_bias_flags(report, opt);
    report->add_option("--avoided", opt.run.avoided_csv,
                       "external avoided-deforestation CSV for the credit ledger");
    add_out_flag(report, opt);

    CLI11_PARSE(app, argc, argv);
    have_diff = diff_opt->count() > 0;

    try {
        resolve_common(opt);

        if (ingest->parsed()) {
            const PanelSet set = load_panels(opt.run.sites_csv, opt.run.covariates_csv, opt.run.meta_csv);
            std::filesystem::create_directories(opt.run.out_dir);
            write_panels(set, opt.run.out_dir / "sites.csv", opt.run.out_dir / "covariates.csv",
                         opt.run.out_dir / "meta.csv");
            json j = {{"projects", set.projects.size()}, {"donors", set.donors.size()}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (fit_cmd->parsed() || att_cmd->parsed()) {
            const PanelSet set = load_panels(opt.run.sites_csv, opt.run.covariates_csv, opt.run.meta_csv);
            std::filesystem::create_directories(opt.run.out_dir);
            write_att_reports(set, opt.run);
            return 0;
        }

        if (validate->parsed()) {
            const PanelSet set = load_panels(opt.run.sites_csv, opt.run.covariates_csv, opt.run.meta_csv);
            const SplitPlan splits = load_split_overrides(opt.run.split_overrides_csv);
            std::filesystem::create_directories(opt.run.out_dir);
            BatchValidation batch = validate_all(set, opt.run.methods, opt.run.fit, opt.run.filter,
                                                 splits, opt.run.thresholds, opt.run.workers);
            write_validation_reports(batch, opt.run);
            json by_method = json::object();
            for (const auto& [m, c] : batch.summary.by_method)
                by_method[std::string(method_name(m))] = {{"max_gap_pass", c.max_gap_pass},
                                                          {"rmspe_pass", c.rmspe_pass},
                                                          {"both_ratio_pass", c.both_ratio_pass},
                                                          {"either_ratio_fail", c.either_ratio_fail}};
            std::cout << by_method.dump(2) << "\n";
            return 0;
        }

        if (sens->parsed()) {
            const PanelSet set = load_panels(opt.run.sites_csv, opt.run.covariates_csv, opt.run.meta_csv);
            const SplitPlan splits = load_split_overrides(opt.run.split_overrides_csv);
            std::filesystem::create_directories(opt.run.out_dir);
            SensitivityTable table =
                sensitivity_table(set, opt.run.fit, opt.run.filter, splits, opt.run.workers);
            write_sensitivity_report(table, opt.run);
            json j = {{"sign_reversals", table.summary.sign_reversals},
                      {"mean_abs_diff_pct", table.summary.mean_abs_diff_pct},
                      {"median_abs_diff_pct", table.summary.median_abs_diff_pct}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (bias_cmd->parsed()) {
            if (!opt.run.bias) {
                std::cerr << "bias: provide --bias-preset or --rd/--rf\n";
                return kExitUsage;
            }
            const BiasModel& m = *opt.run.bias;
            json j = {{"detection_rate", m.detection_rate()},
                      {"false_alarm_rate", m.false_alarm_rate()},
                      {"correction_factor", correction_factor(m)}};
            if (have_diff) j["corrected_difference_ha"] = correct_difference(m, observed_diff);
            if (baseline > 0.0) {
                auto est = corrected_effectiveness(effect, baseline, m);
                j["corrected_effectiveness"] = est.fraction;
                j["over_unity"] = est.over_unity;
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (credits_cmd->parsed()) {
            const CsvTable meta = read_csv(opt.run.meta_csv);
            const auto c_id = meta.column("project_id");
            const auto c_exp = meta.column("expected_credits");
            const auto c_iss = meta.column("issued_credits");
            const auto c_raw = meta.column("baseline_raw_ha");
            const auto c_cor = meta.column("baseline_correct_ha");
            std::map<std::string, double> avoided;
            for (const auto& [id, ha] : load_avoided(opt.run.avoided_csv)) avoided[id] = ha;

            std::vector<CreditInputRow> inputs;
            for (const auto& row : meta.rows) {
                auto it = avoided.find(row[c_id]);
                if (it == avoided.end()) continue;
                CreditInputRow in;
                in.project_id = row[c_id];
                in.avoided_defor_ha = it->second;
                in.expected_credits = parse_double(row[c_exp], "expected_credits");
                in.issued_credits = parse_double(row[c_iss], "issued_credits");
                in.baseline_raw_ha = parse_double(row[c_raw], "baseline_raw_ha");
                in.baseline_correct_ha = parse_double(row[c_cor], "baseline_correct_ha");
                in.exclude_from_inflation =
                    std::find(inflation_excludes.begin(), inflation_excludes.end(),
                              in.project_id) != inflation_excludes.end();
                inputs.push_back(in);
            }
            const auto rows = compute_ledger(inputs);
            std::filesystem::create_directories(opt.run.out_dir);
            write_credit_reports(rows, opt.run);
            const LedgerTotals t = ledger_totals(rows);
            json j = {{"rows", rows.size()},
                      {"total_offsets_raw", t.total_offsets_raw},
                      {"total_offsets_correct", t.total_offsets_correct}};
            if (t.pct_real_raw) j["pct_real_raw"] = t.pct_real_raw->fraction;
            if (t.pct_real_correct) j["pct_real_correct"] = t.pct_real_correct->fraction;
            if (t.relative_increase) j["relative_increase"] = *t.relative_increase;
            try {
                const InflationStats s = baseline_inflation_stats(rows);
                j["baseline_inflation"] = {
                    {"mean", s.mean}, {"min", s.min}, {"max", s.max}, {"rows", s.n_rows}};
            } catch (const Error&) {
            }
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (simulate_cmd->parsed()) {
            if (!true_weights.empty()) spec.true_weights = true_weights;
            if (!sim_bias_preset.empty())
                spec.sensor = bias_preset(sim_bias_preset);
            else if (sim_rd >= 0.0 || sim_rf >= 0.0)
                spec.sensor = BiasModel(sim_rd, sim_rf);
            const Scenario scenario = generate(spec);
            std::filesystem::create_directories(sim_out);
            write_panels(scenario.panels, sim_out / "sites.csv", sim_out / "covariates.csv",
                         sim_out / "meta.csv");
            json truth = {{"att_true", scenario.truth.att_true},
                          {"weights_true", scenario.truth.weights_true},
                          {"clamp_triggered", scenario.truth.clamp_triggered},
                          {"seed", spec.seed}};
            std::ofstream gt(sim_out / "ground_truth.json");
            gt << truth.dump(2) << "\n";
            std::cout << truth.dump(2) << "\n";
            return 0;
        }

        if (report->parsed()) {
            run_pipeline(opt.run);
            std::cout << "reports written to " << opt.run.out_dir.string() << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitReport;
    }
    return kExitUsage;
}
