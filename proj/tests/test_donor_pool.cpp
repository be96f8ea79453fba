#include <doctest.h>

#include <random>

#include "reddsc/donor_pool.hpp"
#include "reddsc/solver.hpp"
#include "support/builders.hpp"

using namespace reddsc;
using namespace reddsc::testing;

namespace {

// project buffer total 100 at 2004 (= start_year - 1), donors at given totals
std::vector<SitePanel> pool_with_buffers(const std::vector<double>& totals) {
    std::vector<SitePanel> pool;
    for (std::size_t i = 0; i < totals.size(); ++i) {
        const double b = totals[i];
        pool.push_back(make_site("d" + std::to_string(i + 1), "atlantis", 1000, 2000,
                                 {0, 1, 2, 3, 4, 5}, {0, b / 4, b / 2, b / 2, b, b}));
    }
    return pool;
}

SitePanel project_with_buffer(double total) {
    return make_site("p", "atlantis", 1000, 2000, {0, 1, 2, 3, 4, 5},
                     {0, total / 4, total / 2, total / 2, total, total});
}

}  // namespace

TEST_CASE("filter keeps donors inside the smallest sufficient rung") {
    const auto pool = pool_with_buffers({105, 95, 130, 10});
    const auto ptrs = panel_ptrs(pool);
    const auto project = project_with_buffer(100);
    const auto meta = make_meta("p", "atlantis", 2005, 2003);
    FilterConfig cfg;
    cfg.min_donors = 2;

    const DonorSelection sel = filter_donors(project, meta, ptrs, cfg);
    CHECK(sel.selected == std::vector<std::string>{"d1", "d2"});
    REQUIRE(sel.tolerance_used.has_value());
    CHECK(*sel.tolerance_used == 0.10);
    CHECK(sel.pool_size_before == 4);
    CHECK(sel.pool_size_after == 2);
    CHECK_FALSE(sel.insufficient_donors);
}

TEST_CASE("disabled filter returns the full pool without a tolerance") {
    const auto pool = pool_with_buffers({105, 95, 130, 10});
    const auto ptrs = panel_ptrs(pool);
    FilterConfig cfg;
    cfg.enabled = false;
    const DonorSelection sel =
        filter_donors(project_with_buffer(100), make_meta("p", "atlantis", 2005, 2003), ptrs, cfg);
    CHECK(sel.selected.size() == 4);
    CHECK_FALSE(sel.tolerance_used.has_value());
}

TEST_CASE("ladder exhaustion falls back to the full pool with a flag") {
    const auto pool = pool_with_buffers({200});
    const auto ptrs = panel_ptrs(pool);
    FilterConfig cfg;
    cfg.min_donors = 2;
    const DonorSelection sel =
        filter_donors(project_with_buffer(100), make_meta("p", "atlantis", 2005, 2003), ptrs, cfg);
    CHECK(sel.insufficient_donors);
    CHECK(sel.selected.size() == 1);
    REQUIRE(sel.tolerance_used.has_value());
    CHECK(*sel.tolerance_used == 0.30);
}

TEST_CASE("filter error cases") {
    FilterConfig cfg;
    const auto meta = make_meta("p", "atlantis", 2005, 2003);
    CHECK_THROWS_AS(filter_donors(project_with_buffer(100), meta, {}, cfg), EmptyPool);

    const auto pool = pool_with_buffers({105});
    const auto ptrs = panel_ptrs(pool);
    CHECK_THROWS_AS(filter_donors(project_with_buffer(0), meta, ptrs, cfg), ZeroProjectBuffer);

    FilterConfig bad;
    bad.tolerance_ladder = {0.3, 0.2};
    CHECK_THROWS_AS(filter_donors(project_with_buffer(100), meta, ptrs, bad), InvalidConfig);
    bad.tolerance_ladder = {0.2, 1.5};
    CHECK_THROWS_AS(filter_donors(project_with_buffer(100), meta, ptrs, bad), InvalidConfig);
}

TEST_CASE("selections are nested along the ladder and deterministic") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(unit(rng) * 10);
        std::vector<double> totals;
        for (int i = 0; i < n; ++i) totals.push_back(1.0 + 300.0 * unit(rng));
        const auto pool = pool_with_buffers(totals);
        const auto ptrs = panel_ptrs(pool);
        const auto project = project_with_buffer(10.0 + 200.0 * unit(rng));
        const auto meta = make_meta("p", "atlantis", 2005, 2003);

        // single-rung selections for increasing tolerances
        std::vector<std::vector<std::string>> selections;
        for (double tol : {0.1, 0.2, 0.4, 0.8, 1.0}) {
            FilterConfig cfg;
            cfg.tolerance_ladder = {tol};
            cfg.min_donors = 1;
            DonorSelection sel = filter_donors(project, meta, ptrs, cfg);
            selections.push_back(sel.insufficient_donors ? std::vector<std::string>{}
                                                         : sel.selected);
            // determinism
            DonorSelection again = filter_donors(project, meta, ptrs, cfg);
            CHECK(again.selected == sel.selected);
        }
        for (std::size_t i = 1; i < selections.size(); ++i) {
            for (const auto& id : selections[i - 1]) {
                CHECK(std::find(selections[i].begin(), selections[i].end(), id) !=
                      selections[i].end());
            }
        }
    }
}
