#include "reddsc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "reddsc/csv.hpp"
#include "reddsc/panel_io.hpp"
#include "reddsc/parallel.hpp"

namespace reddsc {

namespace {

using nlohmann::json;

/// Round half away from zero to a number of decimal digits, the convention
/// used for every display table.
double round_away(double v, int digits = 0) {
    const double scale = std::pow(10.0, digits);
    return std::copysign(std::floor(std::abs(v) * scale + 0.5) / scale, v);
}

std::string fixed_digits(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return std::string(buf);
}

std::string display_rounded(double v, int digits = 0) {
    return fixed_digits(round_away(v, digits), digits);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw Error("failed writing " + path.string());
}

std::string pct_cell(const std::optional<PercentReal>& p) {
    if (!p) return "";
    if (p->over_100) return ">100";
    return display_rounded(100.0 * p->fraction, 0);
}

std::string bool_cell(bool b) { return b ? "true" : "false"; }

const ValidationReport* report_for(const std::vector<ValidationReport>& reports,
                                   const std::string& project_id, Method m) {
    for (const auto& r : reports)
        if (r.project_id == project_id && r.method == m) return &r;
    return nullptr;
}

std::vector<std::string> project_order(const std::vector<ValidationReport>& reports) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (const auto& r : reports)
        if (seen.insert(r.project_id).second) order.push_back(r.project_id);
    return order;
}

json summary_to_json(const ValidationSummary& s) {
    json by_method = json::object();
    for (const auto& [method, c] : s.by_method) {
        by_method[std::string(method_name(method))] = {
            {"projects", c.n},
            {"final_year_pass", c.final_year_pass},
            {"max_gap_pass", c.max_gap_pass},
            {"rmspe_pass", c.rmspe_pass},
            {"both_ratio_pass", c.both_ratio_pass},
            {"either_ratio_fail", c.either_ratio_fail},
        };
    }
    return {{"projects", s.n_projects},
            {"by_method", by_method},
            {"both_ratio_pass_all_methods", s.both_ratio_pass_all_methods}};
}

json config_to_json(const RunConfig& cfg) {
    json methods = json::array();
    for (auto m : cfg.methods) methods.push_back(std::string(method_name(m)));
    json j = {
        {"sites_csv", cfg.sites_csv.string()},
        {"covariates_csv", cfg.covariates_csv.string()},
        {"meta_csv", cfg.meta_csv.string()},
        {"split_overrides_csv", cfg.split_overrides_csv.string()},
        {"avoided_csv", cfg.avoided_csv.string()},
        {"methods", methods},
        {"filter",
         {{"enabled", cfg.filter.enabled},
          {"tolerance_ladder", cfg.filter.tolerance_ladder},
          {"min_donors", cfg.filter.min_donors}}},
        {"fit",
         {{"covariate_weight", cfg.fit.covariate_weight},
          {"solver_tol", cfg.fit.solver_tol},
          {"max_iter", cfg.fit.max_iter},
          {"train_end_year_default", cfg.fit.train_end_year}}},
        {"thresholds",
         {{"final_year_pct_area", cfg.thresholds.final_year_pct_area},
          {"max_gap_ratio", cfg.thresholds.max_gap_ratio},
          {"rmspe_ratio", cfg.thresholds.rmspe_ratio}}},
        {"out_dir", cfg.out_dir.string()},
        {"workers", cfg.workers},
    };
    if (cfg.fit.ridge_lambda)
        j["fit"]["ridge_lambda"] = *cfg.fit.ridge_lambda;
    else
        j["fit"]["ridge_lambda"] = "auto";
    if (cfg.bias)
        j["bias"] = {{"detection_rate", cfg.bias->detection_rate()},
                     {"false_alarm_rate", cfg.bias->false_alarm_rate()}};
    return j;
}

}  // namespace

SplitPlan load_split_overrides(const std::filesystem::path& csv) {
    SplitPlan plan;
    if (csv.empty()) return plan;
    const CsvTable t = read_csv(csv);
    const auto c_id = t.column("project_id");
    const auto c_train = t.column("train_end_year");
    for (const auto& row : t.rows)
        plan.train_end_overrides[row[c_id]] =
            parse_int(row[c_train], "train_end_year of " + row[c_id]);
    return plan;
}

std::vector<std::pair<std::string, double>> load_avoided(const std::filesystem::path& csv) {
    const CsvTable t = read_csv(csv);
    const auto c_id = t.column("project_id");
    const auto c_avoided = t.column("avoided_ha");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& row : t.rows)
        out.emplace_back(row[c_id], parse_double(row[c_avoided], "avoided_ha of " + row[c_id]));
    return out;
}

std::vector<CreditInputRow> credit_inputs_from_meta(
    const PanelSet& set, const std::vector<std::pair<std::string, double>>& avoided) {
    std::map<std::string, double> avoided_by_id(avoided.begin(), avoided.end());
    std::vector<CreditInputRow> rows;
    for (const auto& p : set.projects) {
        auto it = avoided_by_id.find(p.meta.project_id);
        if (it == avoided_by_id.end()) continue;
        CreditInputRow row;
        row.project_id = p.meta.project_id;
        row.avoided_defor_ha = it->second;
        row.baseline_raw_ha = p.meta.baseline_raw_ha;
        row.baseline_correct_ha = p.meta.baseline_correct_ha;
        row.expected_credits = p.meta.expected_credits;
        row.issued_credits = p.meta.issued_credits;
        rows.push_back(row);
    }
    return rows;
}

void write_validation_reports(const BatchValidation& batch, const RunConfig& cfg) {
    const ReportPaths paths;
    const auto order = project_order(batch.reports);

    // One column group per method, mirroring the published table layout with
    // the asterisk replaced by an explicit pass column.
    std::string final_year = "country,project_id,end_of_validation_period";
    std::string rmspe = "country,project_id";
    std::string max_gap = "country,project_id,years";
    for (auto m : cfg.methods) {
        const auto name = std::string(method_name(m));
        final_year += "," + name + "_diff_ha," + name + "_diff_pct," + name + "_pass";
        rmspe += "," + name + "_rmspe_ratio," + name + "_pass";
        max_gap += "," + name + "_max_diff_ha," + name + "_diff_pct," + name + "_pass";
    }
    final_year += '\n';
    rmspe += '\n';
    max_gap += '\n';

    std::string detail =
        "project_id,country,method,train_end_year,validation_end_year,"
        "final_year_diff_ha,final_year_diff_pct_area,final_year_pass,"
        "max_gap_abs_diff_ha,max_gap_ratio,max_gap_pass,zero_final_deforestation,"
        "rmspe_train,rmspe_valid,rmspe_ratio,rmspe_pass,perfect_fit,"
        "donors_used,filter_tolerance,filter_fell_back,degenerate_training,fit_failed,error\n";

    for (const auto& id : order) {
        const ValidationReport* any = nullptr;
        std::string fy_row, rm_row, mg_row;
        for (auto m : cfg.methods) {
            const ValidationReport* r = report_for(batch.reports, id, m);
            if (!r) continue;
            any = r;
            if (r->fit_failed) {
                fy_row += ",,,";
                rm_row += ",,";
                mg_row += ",,,";
            } else {
                fy_row += "," + fixed_digits(r->final_year.diff_ha, 1) + "," +
                          fixed_digits(r->final_year.diff_pct_area, 1) + "," +
                          bool_cell(r->final_year.pass);
                rm_row += "," + fixed_digits(r->rmspe.ratio, 1) + "," + bool_cell(r->rmspe.pass);
                mg_row += "," + fixed_digits(r->max_gap.max_abs_diff_ha, 1) + "," +
                          fixed_digits(100.0 * r->max_gap.ratio, 1) + "," +
                          bool_cell(r->max_gap.pass);
            }

            detail += join_csv_row(
                {r->project_id, r->country, std::string(method_name(r->method)),
                 std::to_string(r->window.train_end_year),
                 std::to_string(r->window.validation_end_year),
                 format_double(r->final_year.diff_ha), format_double(r->final_year.diff_pct_area),
                 bool_cell(r->final_year.pass), format_double(r->max_gap.max_abs_diff_ha),
                 format_double(r->max_gap.ratio), bool_cell(r->max_gap.pass),
                 bool_cell(r->max_gap.zero_final_deforestation), format_double(r->rmspe.rmspe_train),
                 format_double(r->rmspe.rmspe_valid), format_double(r->rmspe.ratio),
                 bool_cell(r->rmspe.pass), bool_cell(r->rmspe.perfect_fit),
                 std::to_string(r->donors_used),
                 r->filter_tolerance ? format_double(*r->filter_tolerance) : "",
                 bool_cell(r->filter_fell_back), bool_cell(r->degenerate_training),
                 bool_cell(r->fit_failed), r->error});
        }
        if (!any) continue;
        const std::string prefix = any->country + "," + id;
        final_year += prefix + "," + std::to_string(any->window.validation_end_year) + fy_row + '\n';
        rmspe += prefix + rm_row + '\n';
        mg_row = prefix + "," + std::to_string(any->window.train_end_year + 1) + "-" +
                 std::to_string(any->window.validation_end_year) + mg_row;
        max_gap += mg_row + '\n';
    }

    write_file(cfg.out_dir / paths.validation_final_year, final_year);
    write_file(cfg.out_dir / paths.validation_rmspe_ratio, rmspe);
    write_file(cfg.out_dir / paths.validation_max_gap, max_gap);
    write_file(cfg.out_dir / paths.validation_detail, detail);
}

namespace {

struct AttRecord {
    AttResult result;
    ScFit fit_result;
    bool has_bands = false;
    std::string error;
};

}  // namespace

void write_att_reports(const PanelSet& set, const RunConfig& cfg) {
    const ReportPaths paths;
    const SplitPlan splits = load_split_overrides(cfg.split_overrides_csv);

    struct Task {
        const Project* project;
        Method method;
    };
    std::vector<Task> tasks;
    for (const auto& p : set.projects)
        for (auto m : cfg.methods) tasks.push_back({&p, m});

    std::vector<AttRecord> records(tasks.size());
    parallel_for(tasks.size(), cfg.workers, [&](std::size_t ti) {
        const Project& project = *tasks[ti].project;
        AttRecord& rec = records[ti];
        try {
            const Window window = split_for(project, splits);
            FitConfig fit_cfg = cfg.fit;
            fit_cfg.method = tasks[ti].method;
            fit_cfg.train_end_year = window.train_end_year;

            std::vector<const SitePanel*> pool = country_pool(set, project);
            std::vector<const SitePanel*> donors = pool;
            if (cfg.filter.enabled) {
                try {
                    DonorSelection sel =
                        filter_donors(project.panel, project.meta, pool, cfg.filter);
                    donors = select_panels(pool, sel);
                } catch (const ZeroProjectBuffer&) {
                }
            }
            rec.fit_result = fit(project.panel, donors, fit_cfg);
            rec.result = att(rec.fit_result, project.panel, project.meta);
            rec.result.filter_state =
                cfg.filter.enabled ? FilterState::with_filter : FilterState::without_filter;
            if (donors.size() >= 3) {
                JackknifeBands bands =
                    jackknife_plus_bands(project.panel, project.meta, donors, fit_cfg);
                rec.result.ci_lower = std::move(bands.lower);
                rec.result.ci_upper = std::move(bands.upper);
                rec.has_bands = true;
            }
        } catch (const Error& e) {
            rec.error = e.what();
        }
    });

    const bool corrected = cfg.bias.has_value();
    const double factor = corrected ? correction_factor(*cfg.bias) : 1.0;

    std::string att_csv = "project_id,method,filter,att_ha";
    if (corrected) att_csv += ",att_corrected_ha";
    att_csv += ",error\n";
    std::string gaps =
        "project_id,method,filter,year,gap_ha,ci_lower_ha,ci_upper_ha";
    if (corrected) gaps += ",gap_corrected_ha";
    gaps += '\n';
    std::string series = "project_id,method,year,actual_cum_ha,counterfactual_cum_ha\n";
    std::string weights = "project_id,method,donor_id,weight\n";

    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const AttRecord& rec = records[ti];
        const std::string id = tasks[ti].project->meta.project_id;
        const std::string method = std::string(method_name(tasks[ti].method));
        const std::string filter =
            std::string(filter_state_name(cfg.filter.enabled ? FilterState::with_filter
                                                             : FilterState::without_filter));
        if (!rec.error.empty()) {
            att_csv += join_csv_row(corrected
                                        ? std::vector<std::string>{id, method, filter, "", "", rec.error}
                                        : std::vector<std::string>{id, method, filter, "", rec.error});
            continue;
        }
        {
            std::vector<std::string> fields{id, method, filter, format_double(rec.result.att)};
            if (corrected) fields.push_back(format_double(rec.result.att / factor));
            fields.push_back("");
            att_csv += join_csv_row(fields);
        }
        for (const auto& [year, gap] : rec.result.gap_series) {
            std::vector<std::string> fields{
                id,
                method,
                filter,
                std::to_string(year),
                format_double(gap),
                rec.has_bands ? format_double(rec.result.ci_lower.at(year)) : "",
                rec.has_bands ? format_double(rec.result.ci_upper.at(year)) : ""};
            if (corrected) fields.push_back(format_double(gap / factor));
            gaps += join_csv_row(fields);
        }
        for (const auto& [year, fitted] : rec.fit_result.fitted_series)
            series += join_csv_row({id, method, std::to_string(year),
                                    format_double(series_at(tasks[ti].project->panel.series, year)),
                                    format_double(fitted)});
        for (std::size_t j = 0; j < rec.fit_result.donor_ids.size(); ++j)
            weights += join_csv_row({id, method, rec.fit_result.donor_ids[j],
                                     format_double(rec.fit_result.weights[j])});
    }

    write_file(cfg.out_dir / paths.att, att_csv);
    write_file(cfg.out_dir / paths.gap_series, gaps);
    write_file(cfg.out_dir / paths.counterfactual_series, series);
    write_file(cfg.out_dir / paths.weights, weights);
}

void write_sensitivity_report(const SensitivityTable& table, const RunConfig& cfg) {
    const ReportPaths paths;
    std::string csv = "country,project_id,att_without_filter,att_with_filter,diff_pct\n";
    for (const auto& row : table.rows) {
        csv += join_csv_row({row.country, row.project_id, fixed_digits(row.att_without, 2),
                             fixed_digits(row.att_with, 2),
                             row.diff_pct ? display_rounded(*row.diff_pct, 0) : ""});
    }
    write_file(cfg.out_dir / paths.sensitivity, csv);
}

void write_credit_reports(const std::vector<CreditLedgerRow>& rows, const RunConfig& cfg) {
    const ReportPaths paths;

    // Display ledger: integers, rounded half away from zero, with the
    // aggregated offsets row at the bottom.
    std::string ledger =
        "project_id,avoided_defor_ha,baseline_raw_ha,baseline_correct_ha,expected_credits,"
        "per_ha_raw,per_ha_correct,offsets_raw,offsets_correct\n";
    std::string pct =
        "project_id,expected_credits,issued_credits,offsets_raw,offsets_correct,"
        "pct_real_raw,pct_real_correct\n";
    std::string full =
        "project_id,avoided_defor_ha,baseline_raw_ha,baseline_correct_ha,expected_credits,"
        "issued_credits,per_ha_raw,per_ha_correct,offsets_raw,offsets_correct,"
        "pct_real_raw,pct_real_correct,excluded_from_inflation\n";

    for (const auto& r : rows) {
        ledger += join_csv_row({r.project_id, display_rounded(r.avoided_defor_ha),
                                display_rounded(r.baseline_raw_ha),
                                display_rounded(r.baseline_correct_ha),
                                display_rounded(r.expected_credits),
                                display_rounded(r.per_ha_raw), display_rounded(r.per_ha_correct),
                                display_rounded(r.offsets_raw),
                                display_rounded(r.offsets_correct)});
        pct += join_csv_row({r.project_id, display_rounded(r.expected_credits),
                             display_rounded(r.issued_credits), display_rounded(r.offsets_raw),
                             display_rounded(r.offsets_correct), pct_cell(r.pct_real_raw),
                             pct_cell(r.pct_real_correct)});
        full += join_csv_row(
            {r.project_id, format_double(r.avoided_defor_ha), format_double(r.baseline_raw_ha),
             format_double(r.baseline_correct_ha), format_double(r.expected_credits),
             format_double(r.issued_credits), format_double(r.per_ha_raw),
             format_double(r.per_ha_correct), format_double(r.offsets_raw),
             format_double(r.offsets_correct),
             r.pct_real_raw ? format_double(r.pct_real_raw->fraction) : "",
             r.pct_real_correct ? format_double(r.pct_real_correct->fraction) : "",
             bool_cell(r.exclude_from_inflation)});
    }

    if (!rows.empty()) {
        const LedgerTotals t = ledger_totals(rows);
        ledger += join_csv_row({"TOTAL", "", "", "", "", "", "",
                                display_rounded(t.total_offsets_raw),
                                display_rounded(t.total_offsets_correct)});
        pct += join_csv_row(
            {"TOTAL", display_rounded(t.total_expected), display_rounded(t.total_issued),
             display_rounded(t.total_offsets_raw), display_rounded(t.total_offsets_correct),
             t.pct_real_raw ? fixed_digits(100.0 * t.pct_real_raw->fraction, 2) : "",
             t.pct_real_correct ? fixed_digits(100.0 * t.pct_real_correct->fraction, 2) : ""});
    }

    write_file(cfg.out_dir / paths.credit_ledger, ledger);
    write_file(cfg.out_dir / paths.credit_percent_real, pct);
    write_file(cfg.out_dir / paths.credit_ledger_full, full);
}

void run_pipeline(const RunConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    const ReportPaths paths;
    write_file(cfg.out_dir / paths.run_config_json, config_to_json(cfg).dump(2) + "\n");

    const PanelSet set = load_panels(cfg.sites_csv, cfg.covariates_csv, cfg.meta_csv);
    const SplitPlan splits = load_split_overrides(cfg.split_overrides_csv);

    BatchValidation validation = validate_all(set, cfg.methods, cfg.fit, cfg.filter, splits,
                                              cfg.thresholds, cfg.workers);
    write_validation_reports(validation, cfg);

    write_att_reports(set, cfg);

    SensitivityTable sensitivity =
        sensitivity_table(set, cfg.fit, cfg.filter, splits, cfg.workers);
    write_sensitivity_report(sensitivity, cfg);

    // Credit accounting: external avoided hectares when supplied, otherwise
    // the final-year cumulative avoided deforestation from the first method's
    // filtered fits, floored at zero.
    std::vector<std::pair<std::string, double>> avoided;
    if (!cfg.avoided_csv.empty()) {
        avoided = load_avoided(cfg.avoided_csv);
    } else {
        for (const auto& p : set.projects) {
            try {
                const Window window = split_for(p, splits);
                FitConfig fit_cfg = cfg.fit;
                fit_cfg.method = cfg.methods.front();
                fit_cfg.train_end_year = window.train_end_year;
                std::vector<const SitePanel*> pool = country_pool(set, p);
                std::vector<const SitePanel*> donors = pool;
                if (cfg.filter.enabled) {
                    try {
                        DonorSelection sel = filter_donors(p.panel, p.meta, pool, cfg.filter);
                        donors = select_panels(pool, sel);
                    } catch (const ZeroProjectBuffer&) {
                    }
                }
                AttResult r = att(fit(p.panel, donors, fit_cfg), p.panel, p.meta);
                const double final_gap = r.gap_series.rbegin()->second;
                avoided.emplace_back(p.meta.project_id, std::max(0.0, -final_gap));
            } catch (const Error&) {
                // flagged elsewhere; the project simply has no credit row
            }
        }
    }
    std::vector<CreditLedgerRow> ledger;
    for (const auto& in : credit_inputs_from_meta(set, avoided)) {
        if (!(in.baseline_raw_ha > 0.0) || !(in.baseline_correct_ha > 0.0)) continue;
        ledger.push_back(compute_ledger_row(in));
    }
    write_credit_reports(ledger, cfg);

    json summary = {
        {"projects", static_cast<int>(set.projects.size())},
        {"donors", static_cast<int>(set.donors.size())},
        {"validation", summary_to_json(validation.summary)},
        {"sensitivity",
         {{"rows", sensitivity.summary.n_rows},
          {"defined_diff_pct", sensitivity.summary.n_defined},
          {"sign_reversals", sensitivity.summary.sign_reversals},
          {"mean_abs_diff_pct", sensitivity.summary.mean_abs_diff_pct},
          {"median_abs_diff_pct", sensitivity.summary.median_abs_diff_pct}}},
    };
    if (!ledger.empty()) {
        const LedgerTotals t = ledger_totals(ledger);
        summary["credits"] = {
            {"rows", static_cast<int>(ledger.size())},
            {"total_offsets_raw", t.total_offsets_raw},
            {"total_offsets_correct", t.total_offsets_correct},
            {"pct_real_raw", t.pct_real_raw ? json(t.pct_real_raw->fraction) : json()},
            {"pct_real_correct",
             t.pct_real_correct ? json(t.pct_real_correct->fraction) : json()},
            {"relative_increase", t.relative_increase ? json(*t.relative_increase) : json()},
        };
    }
    if (cfg.bias)
        summary["bias"] = {{"detection_rate", cfg.bias->detection_rate()},
                           {"false_alarm_rate", cfg.bias->false_alarm_rate()},
                           {"correction_factor", correction_factor(*cfg.bias)}};
    write_file(cfg.out_dir / paths.summary_json, summary.dump(2) + "\n");
}

}  // namespace reddsc
