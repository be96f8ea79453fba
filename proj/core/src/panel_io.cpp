#include "reddsc/panel_io.hpp"

#include <fstream>
#include <map>
#include <set>

#include "reddsc/csv.hpp"

namespace reddsc {

namespace {

struct SiteAccumulator {
    std::string country;
    std::string role;
    double area_ha = 0.0;
    std::map<Year, std::pair<double, double>> rows;  // year -> (cum, buffer_cum)
    std::size_t order = 0;                           // first-seen position, for stable output
};

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out) throw CsvError("failed writing " + path.string());
}

}  // namespace

PanelSet load_panels(const std::filesystem::path& sites_csv,
                     const std::filesystem::path& covariates_csv,
                     const std::filesystem::path& meta_csv) {
    const CsvTable sites = read_csv(sites_csv);
    const auto c_site = sites.column("site_id");
    const auto c_country = sites.column("country");
    const auto c_role = sites.column("role");
    const auto c_area = sites.column("area_ha");
    const auto c_year = sites.column("year");
    const auto c_cum = sites.column("cum_defor_ha");
    const auto c_buf = sites.column("buffer_cum_defor_ha");

    std::map<std::string, SiteAccumulator> acc;
    std::size_t next_order = 0;
    for (const auto& row : sites.rows) {
        const std::string& id = row[c_site];
        if (id.empty()) throw CsvError(sites.file + ": empty site_id");
        const std::string& role = row[c_role];
        if (role != "project" && role != "donor")
            throw CsvError(sites.file + ": site '" + id + "' has role '" + role +
                           "', expected project or donor");
        double area = parse_double(row[c_area], "area_ha of " + id);
        Year year = parse_int(row[c_year], "year of " + id);
        double cum = parse_double(row[c_cum], "cum_defor_ha of " + id);
        double buf = parse_double(row[c_buf], "buffer_cum_defor_ha of " + id);

        auto [it, inserted] = acc.try_emplace(id);
        SiteAccumulator& a = it->second;
        if (inserted) {
            a.country = row[c_country];
            a.role = role;
            a.area_ha = area;
            a.order = next_order++;
        } else {
            if (a.country != row[c_country] || a.role != role || a.area_ha != area)
                throw DuplicateSiteId(id, "conflicting country/role/area across rows");
        }
        if (!a.rows.emplace(year, std::make_pair(cum, buf)).second)
            throw DuplicateSiteId(id, "year " + std::to_string(year) + " listed twice");
    }

    std::vector<std::pair<std::size_t, SitePanel>> ordered;
    std::map<std::string, bool> is_project;
    for (auto& [id, a] : acc) {
        SitePanel p;
        p.site_id = id;
        p.country = a.country;
        p.area_ha = a.area_ha;
        for (const auto& [year, pair] : a.rows) {
            p.series[year] = pair.first;
            p.buffer_series[year] = pair.second;
        }
        validate_panel(p);
        is_project[id] = (a.role == "project");
        ordered.emplace_back(a.order, std::move(p));
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

    std::map<std::string, SitePanel> by_id;
    std::vector<std::string> project_order;
    std::vector<std::string> donor_order;
    for (auto& [order, panel] : ordered) {
        (is_project[panel.site_id] ? project_order : donor_order).push_back(panel.site_id);
        by_id.emplace(panel.site_id, std::move(panel));
    }

    if (!covariates_csv.empty()) {
        const CsvTable cov = read_csv(covariates_csv);
        const auto v_site = cov.column("site_id");
        const auto v_name = cov.column("covariate_name");
        const auto v_value = cov.column("value");
        for (const auto& row : cov.rows) {
            auto it = by_id.find(row[v_site]);
            if (it == by_id.end())
                throw CsvError(cov.file + ": covariate for unknown site '" + row[v_site] + "'");
            it->second.covariates[row[v_name]] =
                parse_double(row[v_value], "covariate " + row[v_name] + " of " + row[v_site]);
        }
    }

    const CsvTable meta = read_csv(meta_csv);
    const auto m_id = meta.column("project_id");
    const auto m_country = meta.column("country");
    const auto m_start = meta.column("start_year");
    const auto m_vend = meta.column("validation_end_year");
    const auto m_exp = meta.column("expected_credits");
    const auto m_iss = meta.column("issued_credits");
    const auto m_braw = meta.column("baseline_raw_ha");
    const auto m_bcor = meta.column("baseline_correct_ha");

    std::map<std::string, ProjectMeta> metas;
    for (const auto& row : meta.rows) {
        ProjectMeta m;
        m.project_id = row[m_id];
        m.country = row[m_country];
        m.start_year = parse_int(row[m_start], "start_year of " + m.project_id);
        m.validation_end_year = parse_int(row[m_vend], "validation_end_year of " + m.project_id);
        m.expected_credits = parse_double(row[m_exp], "expected_credits of " + m.project_id);
        m.issued_credits = parse_double(row[m_iss], "issued_credits of " + m.project_id);
        m.baseline_raw_ha = parse_double(row[m_braw], "baseline_raw_ha of " + m.project_id);
        m.baseline_correct_ha = parse_double(row[m_bcor], "baseline_correct_ha of " + m.project_id);
        if (!metas.emplace(m.project_id, m).second)
            throw InvalidMeta(meta.file + ": project '" + m.project_id + "' listed twice");
    }

    PanelSet set;
    for (const auto& id : project_order) {
        auto it = metas.find(id);
        if (it == metas.end())
            throw InvalidMeta("project site '" + id + "' has no row in " + meta.file);
        set.projects.push_back(Project{std::move(by_id.at(id)), it->second});
        metas.erase(it);
    }
    if (!metas.empty())
        throw InvalidMeta("meta row for '" + metas.begin()->first + "' has no project site");
    for (const auto& id : donor_order) set.donors.push_back(std::move(by_id.at(id)));

    validate_panel_set(set);
    return set;
}

void write_panels(const PanelSet& set,
                  const std::filesystem::path& sites_csv,
                  const std::filesystem::path& covariates_csv,
                  const std::filesystem::path& meta_csv) {
    std::string sites = "site_id,country,role,area_ha,year,cum_defor_ha,buffer_cum_defor_ha\n";
    std::string covs = "site_id,covariate_name,value\n";
    auto emit_site = [&](const SitePanel& p, const char* role) {
        for (const auto& [year, cum] : p.series) {
            sites += join_csv_row({p.site_id, p.country, role, format_double(p.area_ha),
                                   std::to_string(year), format_double(cum),
                                   format_double(series_at(p.buffer_series, year))});
        }
        for (const auto& [name, value] : p.covariates)
            covs += join_csv_row({p.site_id, name, format_double(value)});
    };
    for (const auto& p : set.projects) emit_site(p.panel, "project");
    for (const auto& d : set.donors) emit_site(d, "donor");

    std::string meta =
        "project_id,country,start_year,validation_end_year,expected_credits,issued_credits,"
        "baseline_raw_ha,baseline_correct_ha\n";
    for (const auto& p : set.projects) {
        const auto& m = p.meta;
        meta += join_csv_row({m.project_id, m.country, std::to_string(m.start_year),
                              std::to_string(m.validation_end_year),
                              format_double(m.expected_credits), format_double(m.issued_credits),
                              format_double(m.baseline_raw_ha),
                              format_double(m.baseline_correct_ha)});
    }

    write_file(sites_csv, sites);
    if (!covariates_csv.empty()) write_file(covariates_csv, covs);
    write_file(meta_csv, meta);
}

}  // namespace reddsc
