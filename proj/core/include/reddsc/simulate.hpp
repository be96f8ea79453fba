#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "reddsc/bias.hpp"
#include "reddsc/panel.hpp"

namespace reddsc {

/// Nonnegative annual-increment process for donor outcomes. Each donor gets
/// a fixed deterministic rate multiplier so panels stay identifiable even at
/// zero noise; noise multiplies increments by unit-mean gamma draws.
struct DonorProcess {
    double base_rate_ha = 5.0;
    double trend_ha_per_yr = 0.0;
    double noise_scale = 0.0;  ///< coefficient of variation of the gamma factor
};

struct ScenarioSpec {
    std::uint64_t seed = 0;
    int n_donors = 4;
    Year first_year = 2000;
    Year last_year = 2015;
    double area_ha = 10'000.0;
    DonorProcess donor_process;
    /// Convex weights tying the project to the donors; random simplex draw
    /// when unset.
    std::optional<std::vector<double>> true_weights;
    /// Added to the project's annual increments from effect_start_year on
    /// (typically negative: avoided deforestation).
    double treatment_effect_ha_per_yr = 0.0;
    Year effect_start_year = 2010;
    std::optional<BiasModel> sensor;
    bool stochastic_sensor = false;  ///< binomial sampling instead of expected values
};

struct GroundTruth {
    double att_true = 0.0;  ///< exact injected mean cumulative gap over post years
    std::vector<double> weights_true;
    bool clamp_triggered = false;  ///< some increment hit the nonnegativity clamp
};

struct Scenario {
    PanelSet panels;
    GroundTruth truth;
};

/// Builds a panel set with known ground truth: donors from the increment
/// process, the project as an exact convex combination, the treatment effect
/// injected on post-start increments, and (optionally) every series pushed
/// through the sensor model. Identical seeds give bit-identical panels.
///
/// Throws InfeasibleEffect when increment clamping would distort the injected
/// ATT by more than 1%.
Scenario generate(const ScenarioSpec& spec);

}  // namespace reddsc
