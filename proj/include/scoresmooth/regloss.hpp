#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "scoresmooth/piecewise_linear.hpp"
#include "scoresmooth/score_field.hpp"
#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

inline constexpr std::size_t kDefaultQuadratureNodes = 200;
inline constexpr std::size_t kDefaultPanelNodes = 24;

/// F(kappa) = 2 int_kappa^inf (u - kappa)^2 phi(u) du = 2[(1 + kappa^2) Q(kappa) - kappa phi(kappa)].
double F_kappa(double kappa);

/// kappa with F(kappa) = eps, by bisection on [0, 40] run to machine precision.
double F_inverse(double eps);

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// t * E ||f(X, t) - grad log p_t(X)||^2 with X from the noised empirical
/// distribution; deterministic for a given seed.
McEstimate score_matching_loss_mc(const ScoreField& f, double t, const TrainingSet& ts, std::size_t n_samples,
                                  std::uint64_t seed);

/// Same loss in one dimension for a piecewise-linear f. Each mixture component
/// is integrated with Gauss-Legendre panels (`nodes` points each) split at the
/// breakpoints of f and the midpoints of the set, so the kinks of the
/// integrand never fall inside a panel.
double score_matching_loss_quad(const PiecewiseLinear1D& f, double t, const TrainingSet& ts,
                                std::size_t nodes = kDefaultPanelNodes);

/// Same loss for an arbitrary scalar function of x, by Gauss-Hermite
/// quadrature per mixture component.
double score_matching_loss_quad(const std::function<double(double)>& f, double t, const TrainingSet& ts,
                                std::size_t nodes = kDefaultQuadratureNodes);

/// E_{p_t}[(f - g)^2] by quadrature, without the factor t.
double weighted_sq_distance(const std::function<double(double)>& f, const std::function<double(double)>& g, double t,
                            const TrainingSet& ts, std::size_t nodes = kDefaultQuadratureNodes);

/// Sum over gaps of 2 Delta_k / (t (Delta_k - delta)), the slope-jump total of the smoothed score.
double smoothed_nonsmoothness_closed_form(double t, double delta, const TrainingSet& ts);

/// 2 (n - 1 - 2 n sqrt(eps)) / t, the lower bound on R over the eps-feasible set.
double nonsmoothness_lower_bound(double eps, double t, std::size_t n);

struct OptimalityReport {
    double epsilon = 0.0;
    double kappa = 0.0;
    double t = 0.0;
    std::size_t n = 0;
    double delta = 0.0;
    double loss_value = 0.0;
    double r_candidate = 0.0;
    double r_closed_form = 0.0;
    double r_lower_bound = 0.0;
    double ratio = 0.0;
    bool feasible = false;
    bool near_optimal = false;
};

/// Feasibility and near-optimality certificate for the smoothed score with
/// delta_t = kappa sqrt(t). Requires 0 < eps < 0.015, kappa >= F_inverse(eps)
/// and delta_t < Delta; violations throw ParameterError.
OptimalityReport optimality_report(double eps, double kappa, double t, const TrainingSet& ts,
                                   std::size_t nodes = kDefaultPanelNodes);

struct ConvergenceRow {
    double t = 0.0;
    double loss = 0.0;
    double limit = 0.0;
    double residual = 0.0;
    double residual_over_sqrt_t = 0.0;
};

/// Quadrature loss of the smoothed score against its small-t limit (n-1)/n F(kappa).
std::vector<ConvergenceRow> lemma1_convergence_check(double kappa, const TrainingSet& ts, std::span<const double> t_grid,
                                                     std::size_t nodes = kDefaultPanelNodes);

}  // namespace scoresmooth
