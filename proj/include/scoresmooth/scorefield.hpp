#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

/// delta_t = kappa * sqrt(t), the half width of the collapse band around each anchor.
struct SmoothingParams {
    double kappa = 1.0;

    double delta_of(double t) const;
    /// Largest time for which delta_t < Delta holds, (Delta/kappa)^2.
    double max_time(const TrainingSet& ts) const;
    /// Throws ParameterError unless 0 < delta_t < min half gap.
    void check_valid(double t, const TrainingSet& ts) const;
};

/// Default truncation radius used by ESF-driven samplers.
inline double default_clip_norm(double t) { return 10.0 / t; }

/// E[x_0 | x_t = x] for the noised empirical distribution, via a shifted softmax.
double posterior_mean(double x, double t, const TrainingSet& ts);

/// d/dx log p_t(x) = (posterior_mean(x, t) - x)/t.
double esf_1d(double x, double t, const TrainingSet& ts);

/// Nearest-anchor approximation (y_k* - x)/t; a midpoint belongs to the left cell.
double pl_esf(double x, double t, const TrainingSet& ts);

/// Smoothed piecewise-linear score with collapse bands of half width delta.
///
/// Inside [y_k - delta, y_k + delta] (and beyond the extreme anchors) it equals
/// (y_k - x)/t; between bands it is the straight segment
/// delta/(Delta_k - delta) * (x - z_k)/t, which joins the two bands continuously.
double smoothed_pl_esf(double x, double t, double delta, const TrainingSet& ts);

/// Tangent coordinate via esf_1d, normal coordinates -x_i/t.
Eigen::VectorXd esf_multi(const Eigen::VectorXd& x, double t, const TrainingSet& ts);

/// Tangent coordinate via smoothed_pl_esf with delta_t, normal coordinates -x_i/t.
Eigen::VectorXd smoothed_multi(const Eigen::VectorXd& x, double t, const SmoothingParams& sp, const TrainingSet& ts);

/// Empirical score for anchors in general position (columns of `anchors`).
Eigen::VectorXd empirical_score(const Eigen::VectorXd& x, double t, const Eigen::MatrixXd& anchors);

/// Rescales s onto the ball of radius max_norm when it lies outside.
Eigen::VectorXd clip_score(const Eigen::VectorXd& s, double max_norm);

/// Density of the noised empirical distribution in the tangent coordinate.
double noised_empirical_pdf(double x, double t, const TrainingSet& ts);
/// P[X <= x] for the same distribution.
double noised_empirical_cdf(double x, double t, const TrainingSet& ts);

}  // namespace scoresmooth
