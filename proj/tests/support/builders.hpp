#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "reddsc/panel.hpp"

namespace reddsc::testing {

/// Site from cumulative values starting at first_year.
inline SitePanel make_site(std::string id, std::string country, double area_ha, Year first_year,
                           std::vector<double> cum, std::vector<double> buffer_cum = {}) {
    SitePanel p;
    p.site_id = std::move(id);
    p.country = std::move(country);
    p.area_ha = area_ha;
    if (buffer_cum.empty()) buffer_cum.assign(cum.size(), 0.0);
    for (std::size_t i = 0; i < cum.size(); ++i) {
        p.series[first_year + static_cast<Year>(i)] = cum[i];
        p.buffer_series[first_year + static_cast<Year>(i)] = buffer_cum[i];
    }
    return p;
}

inline ProjectMeta make_meta(std::string id, std::string country, Year start_year,
                             Year validation_end_year) {
    ProjectMeta m;
    m.project_id = std::move(id);
    m.country = std::move(country);
    m.start_year = start_year;
    m.validation_end_year = validation_end_year;
    return m;
}

/// Unique scratch directory under the system temp root, removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() /
                ("reddsc-" + tag + "-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace reddsc::testing
