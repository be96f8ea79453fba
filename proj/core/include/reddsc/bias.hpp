#pragma once

#include <string_view>

#include "reddsc/errors.hpp"

namespace reddsc {

/// Satellite error model: a detection rate r_d (share of true deforestation
/// the product flags) and a false-alarm rate r_f (share of stable forest it
/// flags anyway). Construction enforces 0 <= r_f < r_d <= 1 so the
/// correction factor r_d - r_f is always positive.
class BiasModel {
public:
    BiasModel(double detection_rate, double false_alarm_rate);

    double detection_rate() const { return r_d_; }
    double false_alarm_rate() const { return r_f_; }

    friend bool operator==(const BiasModel&, const BiasModel&) = default;

private:
    double r_d_;
    double r_f_;
};

/// Deforested area the sensor reports for a site of `area_ha` with
/// `true_defor_ha` actually lost: r_f * (A - D) + r_d * D.
double predicted_deforestation(const BiasModel& model, double area_ha, double true_defor_ha);

/// r_d - r_f. Observed between-site differences understate true differences
/// by exactly this factor.
double correction_factor(const BiasModel& model);

/// Recovers a true between-site difference from an observed one.
double correct_difference(const BiasModel& model, double observed_diff_ha);

struct EffectivenessEstimate {
    double fraction = 0.0;
    /// Corrected effectiveness above 100%: implies over-correction or a
    /// misspecified error model, surfaced rather than clamped.
    bool over_unity = false;
};

EffectivenessEstimate corrected_effectiveness(double observed_effect_ha_per_yr,
                                              double baseline_ha_per_yr,
                                              const BiasModel& model);

/// Named rate pairs: "mcnicol2018" (0.19, 0.08) and
/// "hansen-wet-tropics" (0.83, 0.002). Throws InvalidConfig otherwise.
BiasModel bias_preset(std::string_view name);

}  // namespace reddsc
