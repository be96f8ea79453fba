#include "reddsc/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace reddsc {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::scm: return "scm";
        case Method::ascm: return "ascm";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    if (name == "scm") return Method::scm;
    if (name == "ascm") return Method::ascm;
    throw InvalidConfig("unknown method '" + std::string(name) + "'; expected scm or ascm");
}

std::vector<const SitePanel*> panel_ptrs(const std::vector<SitePanel>& panels) {
    std::vector<const SitePanel*> out;
    out.reserve(panels.size());
    for (const auto& p : panels) out.push_back(&p);
    return out;
}

namespace {

/// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    int rho = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        cumsum += u[static_cast<std::size_t>(i)];
        double candidate = (cumsum - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] > candidate) {
            tau = candidate;
            rho = static_cast<int>(i + 1);
        }
    }
    (void)rho;
    return (v.array() - tau).cwiseMax(0.0);
}

struct Design {
    Eigen::MatrixXd A;  // stacked outcome rows (training years) then covariate rows
    Eigen::VectorXd b;
    Eigen::Index outcome_rows = 0;
};

std::vector<Year> training_years(const SitePanel& project, Year train_end) {
    std::vector<Year> years;
    for (const auto& [year, value] : project.series)
        if (year <= train_end) years.push_back(year);
    return years;
}

void require_donor_coverage(const SitePanel& project,
                            const std::vector<const SitePanel*>& donors) {
    const Year y0 = first_year(project.series);
    const Year y1 = last_year(project.series);
    for (const auto* d : donors) {
        if (first_year(d->series) > y0 || last_year(d->series) < y1)
            throw YearOutOfDomain("donor '" + d->site_id + "' does not cover years " +
                                      std::to_string(y0) + ".." + std::to_string(y1) +
                                      " of project '" + project.site_id + "'",
                                  y0);
    }
}

Design build_design(const SitePanel& project, const std::vector<const SitePanel*>& donors,
                    const std::vector<Year>& outcome_years, double covariate_weight) {
    const Eigen::Index n = static_cast<Eigen::Index>(donors.size());
    const Eigen::Index t = static_cast<Eigen::Index>(outcome_years.size());

    // Covariates shared by the project and every donor, standardized over the
    // donor pool. Constant covariates carry no information and are skipped.
    std::vector<std::string> cov_names;
    if (covariate_weight > 0.0) {
        for (const auto& [name, value] : project.covariates) {
            bool everywhere = true;
            for (const auto* d : donors)
                if (!d->covariates.count(name)) {
                    everywhere = false;
                    break;
                }
            if (everywhere) cov_names.push_back(name);
        }
    }

    Design design;
    design.outcome_rows = t;
    design.A.resize(t + static_cast<Eigen::Index>(cov_names.size()), n);
    design.b.resize(design.A.rows());

    for (Eigen::Index r = 0; r < t; ++r) {
        const Year y = outcome_years[static_cast<std::size_t>(r)];
        design.b(r) = series_at(project.series, y);
        for (Eigen::Index j = 0; j < n; ++j)
            design.A(r, j) = series_at(donors[static_cast<std::size_t>(j)]->series, y);
    }

    const double scale = std::sqrt(covariate_weight);
    for (std::size_t k = 0; k < cov_names.size(); ++k) {
        const std::string& name = cov_names[k];
        double mean = 0.0;
        for (const auto* d : donors) mean += d->covariates.at(name);
        mean /= static_cast<double>(donors.size());
        double var = 0.0;
        for (const auto* d : donors) {
            double delta = d->covariates.at(name) - mean;
            var += delta * delta;
        }
        var /= static_cast<double>(donors.size());
        const double sd = std::sqrt(var);
        const Eigen::Index r = t + static_cast<Eigen::Index>(k);
        if (sd == 0.0) {
            design.A.row(r).setZero();
            design.b(r) = 0.0;
            continue;
        }
        design.b(r) = scale * (project.covariates.at(name) - mean) / sd;
        for (Eigen::Index j = 0; j < n; ++j)
            design.A(r, j) =
                scale * (donors[static_cast<std::size_t>(j)]->covariates.at(name) - mean) / sd;
    }
    return design;
}

/// Exact equality-constrained solve on the active face identified by the
/// iterative method, with inner nonnegativity pruning (NNLS style). Returns
/// an empty vector when the face system is unreliable; the caller then keeps
/// the iterate. Deterministic for fixed inputs.
Eigen::VectorXd active_set_polish(const Eigen::MatrixXd& G, const Eigen::VectorXd& c,
                                  const Eigen::VectorXd& w_start) {
    const Eigen::Index n = G.rows();
    std::vector<Eigen::Index> face;
    for (Eigen::Index j = 0; j < n; ++j)
        if (w_start(j) > 1e-12) face.push_back(j);
    if (face.empty()) return {};

    const int budget = 2 * static_cast<int>(n) + 4;
    for (int round = 0; round < budget; ++round) {
        const Eigen::Index m = static_cast<Eigen::Index>(face.size());
        Eigen::MatrixXd K(m + 1, m + 1);
        Eigen::VectorXd rhs(m + 1);
        for (Eigen::Index a = 0; a < m; ++a) {
            for (Eigen::Index b = 0; b < m; ++b) K(a, b) = 2.0 * G(face[a], face[b]);
            K(a, m) = 1.0;
            K(m, a) = 1.0;
            rhs(a) = 2.0 * c(face[a]);
        }
        K(m, m) = 0.0;
        rhs(m) = 1.0;

        Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
        if (!sol.allFinite()) return {};
        if ((K * sol - rhs).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff()))
            return {};

        // prune the most negative face coordinate, if any
        Eigen::Index worst = -1;
        for (Eigen::Index a = 0; a < m; ++a)
            if (sol(a) < -1e-10 && (worst < 0 || sol(a) < sol(worst))) worst = a;
        if (worst >= 0) {
            if (face.size() == 1) return {};
            face.erase(face.begin() + worst);
            continue;
        }

        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        for (Eigen::Index a = 0; a < m; ++a) w(face[a]) = std::max(0.0, sol(a));

        // off-face optimality: gradients must not undercut the multiplier
        const double mu = sol(m);
        const Eigen::VectorXd grad = 2.0 * (G * w - c);
        const double slack = 1e-9 * (1.0 + std::abs(mu) + grad.cwiseAbs().maxCoeff());
        Eigen::Index entering = -1;
        double worst_violation = -slack;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::find(face.begin(), face.end(), j) != face.end()) continue;
            const double violation = -mu - grad(j);  // grad_j >= -mu required
            if (violation > worst_violation) {
                worst_violation = violation;
                entering = j;
            }
        }
        if (entering < 0) return w;
        face.push_back(entering);
        std::sort(face.begin(), face.end());
    }
    return {};
}

/// Accelerated projected gradient (FISTA with restart) for
/// min ||Aw - b||^2 over the simplex. Starts from uniform weights;
/// ties are broken by the deterministic iteration itself. A final
/// active-set polish sharpens the face solution when it strictly helps.
Eigen::VectorXd solve_simplex_ls(const Design& design, double tol, int max_iter,
                                 bool* degenerate) {
    const Eigen::Index n = design.A.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (degenerate) *degenerate = false;

    if (design.A.cwiseAbs().maxCoeff() == 0.0 && design.b.cwiseAbs().maxCoeff() == 0.0) {
        if (degenerate) *degenerate = true;
        return w;
    }
    if (n == 1) return Eigen::VectorXd::Ones(1);

    const Eigen::MatrixXd G = design.A.transpose() * design.A;
    const Eigen::VectorXd c = design.A.transpose() * design.b;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const double lmax = eig.eigenvalues().maxCoeff();
    if (!(lmax > 0.0)) {
        if (degenerate) *degenerate = true;
        return w;
    }
    const double step = 1.0 / (2.0 * lmax);

    auto objective = [&](const Eigen::VectorXd& x) {
        return (design.A * x - design.b).squaredNorm();
    };
    auto stationarity = [&](const Eigen::VectorXd& x) {
        Eigen::VectorXd grad = 2.0 * (G * x - c);
        return (project_to_simplex(x - step * grad) - x).cwiseAbs().maxCoeff();
    };

    Eigen::VectorXd y = w;
    double t_momentum = 1.0;
    double f_w = objective(w);
    bool converged = false;

    for (int iter = 0; iter < max_iter; ++iter) {
        // Stationarity: a projected-gradient step from the current point
        // moves by no more than tol in any coordinate.
        Eigen::VectorXd grad_w = 2.0 * (G * w - c);
        Eigen::VectorXd pg = project_to_simplex(w - step * grad_w);
        if ((pg - w).cwiseAbs().maxCoeff() <= tol) {
            w = pg;
            converged = true;
            break;
        }

        Eigen::VectorXd grad_y = 2.0 * (G * y - c);
        Eigen::VectorXd w_next = project_to_simplex(y - step * grad_y);
        double f_next = objective(w_next);
        if (f_next > f_w) {
            // Restart the momentum sequence on non-monotone progress.
            y = pg;
            w = pg;
            f_w = objective(pg);
            t_momentum = 1.0;
            continue;
        }
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
        y = w_next + ((t_momentum - 1.0) / t_next) * (w_next - w);
        t_momentum = t_next;
        w = w_next;
        f_w = f_next;
    }

    // Sharpen the iterate by solving the identified face exactly. Accepted
    // only when it worsens neither the objective nor the stationarity
    // measure, which keeps tie-broken iterates (and their determinism) intact.
    (void)converged;
    const double f_cur = objective(w);
    const double s_cur = stationarity(w);
    Eigen::VectorXd polished = active_set_polish(G, c, w);
    if (polished.size() == w.size() && polished.allFinite() &&
        objective(polished) <= f_cur && stationarity(polished) <= s_cur) {
        w = polished;
    }
    if (stationarity(w) > tol)
        throw SolverDiverged("no stationary point within " + std::to_string(max_iter) +
                             " iterations (tolerance " + std::to_string(tol) + ")");
    return w;
}

double rmspe_over(const Eigen::VectorXd& residuals, Eigen::Index rows) {
    if (rows == 0) return 0.0;
    return std::sqrt(residuals.head(rows).squaredNorm() / static_cast<double>(rows));
}

YearSeries combine_series(const std::vector<const SitePanel*>& donors,
                          const Eigen::VectorXd& weights, const YearSeries& domain) {
    YearSeries out;
    for (const auto& [year, unused] : domain) {
        double v = 0.0;
        for (std::size_t j = 0; j < donors.size(); ++j)
            v += weights(static_cast<Eigen::Index>(j)) * series_at(donors[j]->series, year);
        out[year] = v;
    }
    return out;
}

ScFit assemble_fit(const SitePanel& project, const std::vector<const SitePanel*>& donors,
                   const FitConfig& cfg, Method method, const Eigen::VectorXd& weights,
                   const Design& design, bool degenerate) {
    ScFit fit;
    fit.project_id = project.site_id;
    fit.method = method;
    fit.config = cfg;
    fit.degenerate_training = degenerate;
    for (const auto* d : donors) fit.donor_ids.push_back(d->site_id);
    fit.weights.assign(weights.data(), weights.data() + weights.size());
    Eigen::VectorXd residuals = design.b - design.A * weights;
    fit.train_rmspe = rmspe_over(residuals, design.outcome_rows);
    fit.fitted_series = combine_series(donors, weights, project.series);
    return fit;
}

void validate_fit_inputs(const SitePanel& project, const std::vector<const SitePanel*>& donors,
                         const std::vector<Year>& train_years) {
    if (donors.empty()) throw EmptyPool("fit needs at least one donor");
    if (train_years.size() < 2)
        throw EmptyWindow("training window must contain at least 2 years, has " +
                          std::to_string(train_years.size()));
    require_donor_coverage(project, donors);
}

// Ridge system on centered pre-treatment outcomes. X has one row per donor.
struct RidgeContext {
    Eigen::MatrixXd Xc;       // centered donor outcomes (n x t)
    Eigen::VectorXd x1c;      // centered project outcomes (t)
    Eigen::MatrixXd M;        // Xc^T Xc (t x t)
    double sigma_max = 0.0;   // largest eigenvalue of M
};

RidgeContext build_ridge_context(const SitePanel& project,
                                 const std::vector<const SitePanel*>& donors,
                                 const std::vector<Year>& years) {
    const Eigen::Index n = static_cast<Eigen::Index>(donors.size());
    const Eigen::Index t = static_cast<Eigen::Index>(years.size());
    Eigen::MatrixXd X(n, t);
    Eigen::VectorXd x1(t);
    for (Eigen::Index c = 0; c < t; ++c) {
        const Year y = years[static_cast<std::size_t>(c)];
        x1(c) = series_at(project.series, y);
        for (Eigen::Index j = 0; j < n; ++j)
            X(j, c) = series_at(donors[static_cast<std::size_t>(j)]->series, y);
    }
    RidgeContext ctx;
    Eigen::RowVectorXd mean = X.colwise().mean();
    ctx.Xc = X.rowwise() - mean;
    ctx.x1c = x1 - mean.transpose();
    ctx.M = ctx.Xc.transpose() * ctx.Xc;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ctx.M);
    ctx.sigma_max = eig.eigenvalues().maxCoeff();
    return ctx;
}

Eigen::VectorXd augmented_weights(const RidgeContext& ctx, const Eigen::VectorXd& w_scm,
                                  double lambda) {
    const Eigen::VectorXd r = ctx.x1c - ctx.Xc.transpose() * w_scm;
    const Eigen::Index t = ctx.M.rows();
    Eigen::MatrixXd system = ctx.M + lambda * Eigen::MatrixXd::Identity(t, t);
    if (lambda == 0.0) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
        if (!lu.isInvertible())
            throw IllConditioned(
                "ridge system is singular at lambda = 0; raise the ridge penalty");
        return w_scm + ctx.Xc * lu.solve(r);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(system);
    return w_scm + ctx.Xc * ldlt.solve(r);
}

/// Leave-one-year-out cross-validation over the training window: for each
/// held-out year, both the simplex weights and the ridge augmentation are
/// refit on the remaining years and scored on the held-out project outcome.
/// Exact ties prefer the larger (more regularized) penalty.
double select_lambda_cv(const SitePanel& project, const std::vector<const SitePanel*>& donors,
                        const std::vector<Year>& train_years, const FitConfig& cfg,
                        double sigma_max) {
    if (!(sigma_max > 0.0)) return 1.0;  // no donor variation: augmentation vanishes anyway

    std::vector<double> lambdas;
    for (int k = 0; k <= 8; ++k) lambdas.push_back(sigma_max * std::pow(10.0, -k));

    std::vector<double> errors(lambdas.size(), 0.0);
    for (std::size_t hold = 0; hold < train_years.size(); ++hold) {
        std::vector<Year> sub;
        for (std::size_t i = 0; i < train_years.size(); ++i)
            if (i != hold) sub.push_back(train_years[i]);
        if (sub.empty()) continue;

        Design design = build_design(project, donors, sub, cfg.covariate_weight);
        bool degenerate = false;
        Eigen::VectorXd w = solve_simplex_ls(design, cfg.solver_tol, cfg.max_iter, &degenerate);
        RidgeContext ctx = build_ridge_context(project, donors, sub);

        const Year held_year = train_years[hold];
        const double actual = series_at(project.series, held_year);
        Eigen::VectorXd donor_at_year(static_cast<Eigen::Index>(donors.size()));
        for (std::size_t j = 0; j < donors.size(); ++j)
            donor_at_year(static_cast<Eigen::Index>(j)) = series_at(donors[j]->series, held_year);

        for (std::size_t li = 0; li < lambdas.size(); ++li) {
            Eigen::VectorXd w_aug = augmented_weights(ctx, w, lambdas[li]);
            const double pred = donor_at_year.dot(w_aug);
            const double err = actual - pred;
            errors[li] += err * err;
        }
    }

    std::size_t best = 0;
    for (std::size_t li = 1; li < lambdas.size(); ++li)
        if (errors[li] < errors[best]) best = li;
    return lambdas[best];
}

}  // namespace

ScFit fit_scm(const SitePanel& project, const std::vector<const SitePanel*>& donors,
              const FitConfig& cfg) {
    const std::vector<Year> train = training_years(project, cfg.train_end_year);
    validate_fit_inputs(project, donors, train);
    Design design = build_design(project, donors, train, cfg.covariate_weight);
    bool degenerate = false;
    Eigen::VectorXd w = solve_simplex_ls(design, cfg.solver_tol, cfg.max_iter, &degenerate);
    return assemble_fit(project, donors, cfg, Method::scm, w, design, degenerate);
}

ScFit fit_ascm(const SitePanel& project, const std::vector<const SitePanel*>& donors,
               const FitConfig& cfg) {
    const std::vector<Year> train = training_years(project, cfg.train_end_year);
    validate_fit_inputs(project, donors, train);
    Design design = build_design(project, donors, train, cfg.covariate_weight);
    bool degenerate = false;
    Eigen::VectorXd w_scm = solve_simplex_ls(design, cfg.solver_tol, cfg.max_iter, &degenerate);

    RidgeContext ctx = build_ridge_context(project, donors, train);
    const double lambda = cfg.ridge_lambda
                              ? *cfg.ridge_lambda
                              : select_lambda_cv(project, donors, train, cfg, ctx.sigma_max);
    if (lambda < 0.0) throw InvalidConfig("ridge_lambda must be nonnegative");

    Eigen::VectorXd w_aug = augmented_weights(ctx, w_scm, lambda);
    ScFit fit = assemble_fit(project, donors, cfg, Method::ascm, w_aug, design, degenerate);
    fit.ridge_lambda_used = lambda;
    return fit;
}

ScFit fit(const SitePanel& project, const std::vector<const SitePanel*>& donors,
          const FitConfig& cfg) {
    return cfg.method == Method::ascm ? fit_ascm(project, donors, cfg)
                                      : fit_scm(project, donors, cfg);
}

YearSeries predict_counterfactual(const ScFit& fit, Year from_year, Year to_year) {
    if (from_year > to_year) throw InvalidConfig("empty prediction range");
    YearSeries out;
    for (Year y = from_year; y <= to_year; ++y) out[y] = series_at(fit.fitted_series, y);
    return out;
}

}  // namespace reddsc
