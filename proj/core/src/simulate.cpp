#include "reddsc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace reddsc {

namespace {

constexpr const char* kProjectId = "sim-project";
constexpr const char* kCountry = "simland";

std::string donor_id(int j) {
    std::string n = std::to_string(j + 1);
    if (n.size() < 2) n.insert(n.begin(), '0');
    return "donor-" + n;
}

void validate_spec(const ScenarioSpec& spec) {
    if (spec.n_donors < 1) throw InvalidConfig("n_donors must be >= 1");
    if (spec.first_year >= spec.last_year) throw InvalidConfig("year range must span >= 2 years");
    if (!(spec.area_ha > 0.0)) throw InvalidConfig("area_ha must be positive");
    if (spec.donor_process.noise_scale < 0.0) throw InvalidConfig("noise_scale must be >= 0");
    // Room for a training year, a validation year, and a post period.
    if (!(spec.effect_start_year > spec.first_year + 1 && spec.effect_start_year < spec.last_year))
        throw InvalidConfig("effect_start_year must leave pre-treatment and post years");
    if (spec.true_weights) {
        if (static_cast<int>(spec.true_weights->size()) != spec.n_donors)
            throw InvalidConfig("true_weights length must equal n_donors");
        double sum = 0.0;
        for (double w : *spec.true_weights) {
            if (w < 0.0) throw InvalidConfig("true_weights must be nonnegative");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("true_weights must sum to 1");
    }
}

std::vector<double> random_simplex(int n, std::mt19937_64& rng) {
    std::exponential_distribution<double> exp1(1.0);
    std::vector<double> w(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& v : w) {
        v = exp1(rng);
        sum += v;
    }
    for (auto& v : w) v /= sum;
    return w;
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
    validate_spec(spec);
    std::mt19937_64 rng(spec.seed);

    const std::vector<double> weights =
        spec.true_weights ? *spec.true_weights : random_simplex(spec.n_donors, rng);

    const DonorProcess& proc = spec.donor_process;
    std::gamma_distribution<double> gamma_unit;
    if (proc.noise_scale > 0.0) {
        const double shape = 1.0 / (proc.noise_scale * proc.noise_scale);
        gamma_unit = std::gamma_distribution<double>(shape, 1.0 / shape);  // mean 1
    }

    auto draw_increment = [&](int donor, Year year) {
        // Deterministic per-donor rate multiplier keeps panels identifiable
        // at zero noise.
        const double mult =
            0.7 + 0.6 * donor / std::max(1, spec.n_donors - 1);
        const double level =
            std::max(0.0, proc.base_rate_ha + proc.trend_ha_per_yr * (year - spec.first_year - 1)) *
            mult;
        return proc.noise_scale > 0.0 ? level * gamma_unit(rng) : level;
    };

    // Donors: cumulative site and buffer series from nonnegative increments,
    // clamped so the site series never exceeds the area.
    std::vector<SitePanel> donors(static_cast<std::size_t>(spec.n_donors));
    for (int j = 0; j < spec.n_donors; ++j) {
        SitePanel& d = donors[static_cast<std::size_t>(j)];
        d.site_id = donor_id(j);
        d.country = kCountry;
        d.area_ha = spec.area_ha;
        double cum = 0.0;
        double buf = 0.0;
        d.series[spec.first_year] = 0.0;
        d.buffer_series[spec.first_year] = 0.0;
        for (Year y = spec.first_year + 1; y <= spec.last_year; ++y) {
            cum += std::min(draw_increment(j, y), spec.area_ha - cum);
            buf += draw_increment(j, y);
            d.series[y] = cum;
            d.buffer_series[y] = buf;
        }
    }

    // Project: exact convex combination of the donors.
    SitePanel project;
    project.site_id = kProjectId;
    project.country = kCountry;
    project.area_ha = spec.area_ha;
    for (Year y = spec.first_year; y <= spec.last_year; ++y) {
        double cum = 0.0;
        double buf = 0.0;
        for (int j = 0; j < spec.n_donors; ++j) {
            cum += weights[static_cast<std::size_t>(j)] * donors[static_cast<std::size_t>(j)].series[y];
            buf += weights[static_cast<std::size_t>(j)] *
                   donors[static_cast<std::size_t>(j)].buffer_series[y];
        }
        project.series[y] = cum;
        project.buffer_series[y] = buf;
    }

    // Inject the treatment effect on post-start increments, clamping so the
    // cumulative series stays monotone and within the area.
    const YearSeries counterfactual = project.series;
    GroundTruth truth;
    truth.weights_true = weights;
    if (spec.treatment_effect_ha_per_yr != 0.0) {
        double cum = project.series[spec.effect_start_year - 1];
        for (Year y = spec.effect_start_year; y <= spec.last_year; ++y) {
            double inc = counterfactual.at(y) - counterfactual.at(y - 1) +
                         spec.treatment_effect_ha_per_yr;
            if (inc < 0.0) {
                inc = 0.0;
                truth.clamp_triggered = true;
            }
            if (cum + inc > spec.area_ha) {
                inc = spec.area_ha - cum;
                truth.clamp_triggered = true;
            }
            cum += inc;
            project.series[y] = cum;
        }
    }

    // Exact injected ATT on the (possibly clamped) true series.
    {
        double sum = 0.0;
        int n = 0;
        for (Year y = spec.effect_start_year; y <= spec.last_year; ++y) {
            sum += project.series[y] - counterfactual.at(y);
            ++n;
        }
        truth.att_true = sum / n;
        const int k = n;
        const double nominal = spec.treatment_effect_ha_per_yr * (k + 1) / 2.0;
        if (std::abs(truth.att_true - nominal) > 0.01 * std::max(std::abs(nominal), 1e-12))
            throw InfeasibleEffect("increment clamping distorts the injected ATT from " +
                                   std::to_string(nominal) + " to " +
                                   std::to_string(truth.att_true) +
                                   "; shrink the effect or raise the base rate");
    }

    // Sensor: every series observed through the error model. Deterministic
    // mode scales cumulative totals by r_d - r_f (the expected-value form,
    // re-zeroed at the first record year); stochastic mode draws binomial
    // detections per year plus false alarms spread uniformly over the record.
    if (spec.sensor) {
        const double factor = correction_factor(*spec.sensor);
        auto observe = [&](SitePanel& site) {
            if (!spec.stochastic_sensor) {
                for (auto& [year, value] : site.series) value *= factor;
                for (auto& [year, value] : site.buffer_series) value *= factor;
                return;
            }
            auto observe_series = [&](YearSeries& s, double area) {
                const double r_d = spec.sensor->detection_rate();
                const double r_f = spec.sensor->false_alarm_rate();
                const Year y0 = first_year(s);
                const Year y1 = last_year(s);
                const long long stable =
                    std::llround(std::max(0.0, area - s.rbegin()->second));
                std::binomial_distribution<long long> false_total(stable, r_f);
                std::uniform_int_distribution<Year> false_year(y0 + 1, y1);
                YearSeries observed_inc;
                for (Year y = y0 + 1; y <= y1; ++y) observed_inc[y] = 0.0;
                for (Year y = y0 + 1; y <= y1; ++y) {
                    const long long true_inc = std::llround(s.at(y) - s.at(y - 1));
                    if (true_inc > 0) {
                        std::binomial_distribution<long long> detected(true_inc, r_d);
                        observed_inc[y] += static_cast<double>(detected(rng));
                    }
                }
                const long long n_false = false_total(rng);
                for (long long i = 0; i < n_false; ++i) observed_inc[false_year(rng)] += 1.0;
                double cum = 0.0;
                for (Year y = y0 + 1; y <= y1; ++y) {
                    cum = std::min(cum + observed_inc[y], area);
                    s[y] = cum;
                }
                s[y0] = 0.0;
            };
            observe_series(site.series, site.area_ha);
            observe_series(site.buffer_series, site.area_ha);
        };
        observe(project);
        for (auto& d : donors) observe(d);
    }

    // Metadata: the pre-treatment split ends right before the effect starts;
    // baselines carry the true counterfactual post-period deforestation.
    ProjectMeta meta;
    meta.project_id = kProjectId;
    meta.country = kCountry;
    meta.start_year = spec.effect_start_year;
    meta.validation_end_year = spec.effect_start_year - 1;
    const double post_defor =
        counterfactual.at(spec.last_year) - counterfactual.at(spec.effect_start_year - 1);
    meta.baseline_raw_ha = post_defor;
    meta.baseline_correct_ha = post_defor;

    Scenario scenario;
    scenario.truth = truth;
    scenario.panels.projects.push_back(Project{std::move(project), meta});
    scenario.panels.donors = std::move(donors);
    validate_panel_set(scenario.panels);
    return scenario;
}

}  // namespace reddsc
