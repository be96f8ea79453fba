#include "reddsc/bias.hpp"

#include <string>

namespace reddsc {

BiasModel::BiasModel(double detection_rate, double false_alarm_rate)
    : r_d_(detection_rate), r_f_(false_alarm_rate) {
    if (!(0.0 <= r_f_ && r_f_ < r_d_ && r_d_ <= 1.0))
        throw InvalidBiasModel("rates must satisfy 0 <= r_f < r_d <= 1, got r_d = " +
                               std::to_string(r_d_) + ", r_f = " + std::to_string(r_f_));
}

double predicted_deforestation(const BiasModel& model, double area_ha, double true_defor_ha) {
    if (!(0.0 <= true_defor_ha && true_defor_ha <= area_ha))
        throw DeforestationExceedsArea("true deforestation " + std::to_string(true_defor_ha) +
                                       " ha outside [0, " + std::to_string(area_ha) + "] ha");
    return model.false_alarm_rate() * (area_ha - true_defor_ha) +
           model.detection_rate() * true_defor_ha;
}

double correction_factor(const BiasModel& model) {
    return model.detection_rate() - model.false_alarm_rate();
}

double correct_difference(const BiasModel& model, double observed_diff_ha) {
    return observed_diff_ha / correction_factor(model);
}

EffectivenessEstimate corrected_effectiveness(double observed_effect_ha_per_yr,
                                              double baseline_ha_per_yr, const BiasModel& model) {
    if (!(baseline_ha_per_yr > 0.0)) throw ZeroBaseline("baseline rate must be positive");
    EffectivenessEstimate out;
    out.fraction = (observed_effect_ha_per_yr / baseline_ha_per_yr) / correction_factor(model);
    out.over_unity = out.fraction > 1.0;
    return out;
}

BiasModel bias_preset(std::string_view name) {
    if (name == "mcnicol2018") return BiasModel(0.19, 0.08);
    if (name == "hansen-wet-tropics") return BiasModel(0.83, 0.002);
    throw InvalidConfig("unknown bias preset '" + std::string(name) +
                        "'; available: mcnicol2018, hansen-wet-tropics");
}

}  // namespace reddsc
