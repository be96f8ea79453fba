#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reddsc/panel.hpp"

namespace reddsc {

enum class Method { scm, ascm };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);  // "scm" | "ascm"

struct FitConfig {
    Method method = Method::scm;
    Year train_end_year = 0;
    /// Scales standardized covariate rows against outcome rows in the least
    /// squares objective. 0 fits on outcomes only.
    double covariate_weight = 0.0;
    /// Ridge penalty for the augmented method; unset selects it by
    /// leave-one-year-out cross-validation over the training window.
    std::optional<double> ridge_lambda;
    double solver_tol = 1e-9;
    int max_iter = 10'000;
};

struct ScFit {
    std::string project_id;
    Method method = Method::scm;
    std::vector<std::string> donor_ids;
    std::vector<double> weights;   ///< sums to 1 within solver_tol; scm: >= -solver_tol
    YearSeries fitted_series;      ///< counterfactual over the project's full year domain
    double train_rmspe = 0.0;
    bool degenerate_training = false;  ///< all-zero training outcomes; uniform weights returned
    double ridge_lambda_used = 0.0;    ///< resolved value (ascm only)
    FitConfig config;
};

/// Simplex-constrained least squares on the training window: weights are
/// nonnegative and sum to one. Deterministic accelerated projected-gradient
/// iteration from the uniform start point.
ScFit fit_scm(const SitePanel& project, const std::vector<const SitePanel*>& donors,
              const FitConfig& cfg);

/// Ridge-augmented variant: the simplex solution is shifted by a ridge
/// regression on centered pre-treatment outcomes, allowing negative weights
/// and extrapolation. Weights still sum to one; the training fit error never
/// exceeds the plain method's on the same instance.
ScFit fit_ascm(const SitePanel& project, const std::vector<const SitePanel*>& donors,
               const FitConfig& cfg);

/// Dispatches on cfg.method.
ScFit fit(const SitePanel& project, const std::vector<const SitePanel*>& donors,
          const FitConfig& cfg);

/// Evaluates the fitted counterfactual on [from_year, to_year].
YearSeries predict_counterfactual(const ScFit& fit, Year from_year, Year to_year);

// convenience for owning containers
std::vector<const SitePanel*> panel_ptrs(const std::vector<SitePanel>& panels);

}  // namespace reddsc
