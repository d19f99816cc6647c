#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scoresmooth/histogram.hpp"
#include "scoresmooth/score_field.hpp"
#include "scoresmooth/scorefield.hpp"
#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

using DensityFn = std::function<double(double)>;

/// rho-power time grid: sigma_i interpolates linearly in sigma^(1/rho) between
/// sqrt(t0) and sqrt(t_min), and t_i = sigma_i^2.
struct NoiseSchedule {
    double t0 = 0.02;
    double t_min = 1e-5;
    std::size_t steps = 200;
    double rho = 2.0;

    void validate() const;
    /// steps values, strictly decreasing from t0 to t_min.
    std::vector<double> times() const;
};

/// Where a tangent coordinate sits at time t: inside the collapse band of
/// anchor k (the outer bands extend to infinity) or in the gap between
/// anchors k and k+1. Band edges belong to the gap.
struct Region {
    bool band = false;
    std::size_t index = 0;
};

Region region_of(double x, double t, const SmoothingParams& sp, const TrainingSet& ts);

/// Closed-form transport of the smoothed-score flow from time t back to s.
/// Bands contract toward their anchor by sqrt(s/t); gaps contract toward their
/// midpoint by (Delta_k - delta_s)/(Delta_k - delta_t). s = 0 is allowed.
double flow_map(double x, double s, double t, const SmoothingParams& sp, const TrainingSet& ts);

/// Tangent coordinate through flow_map, normal coordinates scaled by sqrt(s/t).
Eigen::VectorXd flow_map_multi(const Eigen::VectorXd& x, double s, double t, const SmoothingParams& sp,
                               const TrainingSet& ts);

/// Density at time s of the law transported from a time-t density; s must be > 0.
DensityFn pushforward_density(double s, double t, DensityFn source, const SmoothingParams& sp, const TrainingSet& ts);

/// A law on the line described by its density and, optionally, its
/// distribution function (masses are integrated from the density without it).
struct SourceLaw {
    DensityFn pdf;
    DensityFn cdf;
};

/// Tangent marginal of the noised empirical distribution at time t.
SourceLaw noised_empirical_law(double t, const TrainingSet& ts);

/// The s = 0 law of the flow: atoms at the anchors plus a density on [y_1, y_n].
struct TerminalDecomposition {
    std::vector<double> anchors;
    std::vector<double> atom_weights;
    double smooth_mass = 0.0;
    /// Normalized smooth part (integrates to 1); zero outside [y_1, y_n].
    DensityFn smooth_density;
    /// Points where smooth_density has kinks or jumps, for quadrature.
    std::vector<double> breaks;

    double atom_total() const;
    /// smooth_mass * smooth_density(x): the absolutely continuous part.
    double continuous_part(double x) const { return smooth_mass * smooth_density(x); }
};

TerminalDecomposition terminal_decomposition(double t, const SourceLaw& source, const SmoothingParams& sp,
                                             const TrainingSet& ts);

struct Snapshot {
    std::size_t step = 0;
    double t = 0.0;
    Eigen::MatrixXd states;  // d x m
};

struct MarginalMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;
};

struct BackwardOptions {
    /// Times at which to keep the full state; the nearest grid time is used.
    std::vector<double> snapshot_times;
    /// Per-coordinate histogram binning applied at every grid time.
    double hist_lo = -1.05;
    double hist_hi = 1.05;
    std::size_t hist_bins = 50;
    /// Samples integrated per batched field evaluation.
    std::size_t batch = 4096;
};

struct DenoiseRun {
    NoiseSchedule schedule;
    std::string field;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<Snapshot> snapshots;
    /// histograms[i][c]: coordinate c at grid time times[i].
    std::vector<std::vector<Histogram>> histograms;
    std::vector<MarginalMoments> moments;
    Eigen::MatrixXd terminal;

    std::size_t sample_count() const { return static_cast<std::size_t>(terminal.cols()); }
    std::size_t dim() const { return static_cast<std::size_t>(terminal.rows()); }
    /// Snapshot closest in time to t.
    const Snapshot& snapshot_near(double t) const;
    /// Index of the grid time closest to t.
    std::size_t step_near(double t) const;
};

/// Explicit Euler on dx = -1/2 s_t(x) dt over the schedule grid. A non-finite
/// state aborts with NumericError naming the step.
DenoiseRun integrate_backward(const ScoreField& field, const NoiseSchedule& schedule, const Eigen::MatrixXd& x_start,
                              std::uint64_t seed, const BackwardOptions& options = {});

/// KL(u || p) for u uniform on [lo, hi], by adaptive Simpson split at `breaks`.
/// Returns +inf when p vanishes somewhere inside.
double kl_uniform(const DensityFn& p, double lo, double hi, std::span<const double> breaks = {}, double tol = 1e-6);

/// Same on the symmetric interval [-a, a].
double kl_uniform(const DensityFn& p, double a, std::span<const double> breaks = {}, double tol = 1e-6);

/// Upper bound on KL(u_1 || terminal smooth part) for two anchors at +-1:
/// 1/(3 t0 (1 - kappa sqrt t0)) + log(sqrt t0 / (1 - kappa sqrt t0)) + log(2 sqrt(2 pi)).
double kl_terminal_bound(double t0, double kappa);

}  // namespace scoresmooth
