#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

/// Continuous piecewise-linear function on R.
///
/// m breakpoints b_0 < ... < b_{m-1} split the line into m + 1 affine
/// segments; segment 0 covers (-inf, b_0] and segment m covers [b_{m-1}, inf).
class PiecewiseLinear1D {
public:
    struct Segment {
        double slope = 0.0;
        double intercept = 0.0;
        double operator()(double x) const { return slope * x + intercept; }
    };

    /// Validates ordering and continuity (relative tolerance `continuity_tol`).
    static PiecewiseLinear1D from_segments(std::vector<double> breakpoints, std::vector<Segment> segments,
                                           double continuity_tol = 1e-10);
    /// Interpolates (xs, ys) with the given slopes on the two unbounded ends.
    static PiecewiseLinear1D interpolate(std::span<const double> xs, std::span<const double> ys, double left_slope,
                                         double right_slope);
    static PiecewiseLinear1D affine(double slope, double intercept);

    double operator()(double x) const;

    std::span<const double> breakpoints() const { return breakpoints_; }
    std::span<const Segment> segments() const { return segments_; }

    /// f'(b_i+) - f'(b_i-) for every breakpoint.
    std::vector<double> slope_jumps() const;

    /// f + (slope * x + intercept).
    PiecewiseLinear1D plus_affine(double slope, double intercept) const;

private:
    std::vector<double> breakpoints_;
    std::vector<Segment> segments_;
};

/// Total variation of f', i.e. the sum of absolute slope jumps.
double nonsmoothness_R(const PiecewiseLinear1D& f);

/// Exact int (f - g)^2 N(x; mean, sd^2) dx from truncated Gaussian moments on
/// the merged segments.
double gaussian_weighted_sq_diff(const PiecewiseLinear1D& f, const PiecewiseLinear1D& g, double mean, double sd);

/// The smoothed score at fixed (t, delta) written as a piecewise-linear function.
PiecewiseLinear1D smoothed_as_pl(double t, double delta, const TrainingSet& ts);

/// Knots spaced 1e-3 sqrt(t) within `window` standard deviations of every
/// anchor, `gap_knots` uniform knots across the rest of each gap, plus the
/// ends out to one standard deviation past the window.
std::vector<double> anchor_refined_knots(double t, const TrainingSet& ts, double window = 10.0,
                                         std::size_t gap_knots = 2000);

/// Piecewise-linear interpolant of the empirical score through `knots`;
/// the unbounded ends continue with slope -1/t.
PiecewiseLinear1D interpolate_esf(double t, const TrainingSet& ts, std::span<const double> knots);

}  // namespace scoresmooth
