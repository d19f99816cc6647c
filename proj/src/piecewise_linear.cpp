#include "scoresmooth/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scoresmooth/errors.hpp"
#include "scoresmooth/normal.hpp"
#include "scoresmooth/scorefield.hpp"

namespace scoresmooth {

PiecewiseLinear1D PiecewiseLinear1D::from_segments(std::vector<double> breakpoints, std::vector<Segment> segments,
                                                   double continuity_tol) {
    if (segments.size() != breakpoints.size() + 1)
        throw ParameterError("need exactly one more segment than breakpoints");
    for (std::size_t i = 0; i < breakpoints.size(); ++i) {
        const double b = breakpoints[i];
        if (!std::isfinite(b)) throw ParameterError("breakpoint " + std::to_string(i) + " is not finite");
        if (i > 0 && !(b > breakpoints[i - 1])) throw ParameterError("breakpoints must be strictly increasing");
        const double left = segments[i](b), right = segments[i + 1](b);
        const double scale = std::max({1.0, std::abs(left), std::abs(right)});
        if (std::abs(left - right) > continuity_tol * scale)
            throw ParameterError("discontinuity at breakpoint " + std::to_string(i) + " (x = " + std::to_string(b) + ")");
    }
    PiecewiseLinear1D f;
    f.breakpoints_ = std::move(breakpoints);
    f.segments_ = std::move(segments);
    return f;
}

PiecewiseLinear1D PiecewiseLinear1D::interpolate(std::span<const double> xs, std::span<const double> ys,
                                                 double left_slope, double right_slope) {
    if (xs.size() != ys.size() || xs.size() < 2) throw ParameterError("interpolation needs >= 2 matching knots");
    std::vector<double> breaks(xs.begin(), xs.end());
    std::vector<Segment> segs;
    segs.reserve(xs.size() + 1);
    segs.push_back({left_slope, ys[0] - left_slope * xs[0]});
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        if (!(xs[i + 1] > xs[i])) throw ParameterError("interpolation knots must be strictly increasing");
        const double slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        segs.push_back({slope, ys[i] - slope * xs[i]});
    }
    segs.push_back({right_slope, ys.back() - right_slope * xs.back()});
    return from_segments(std::move(breaks), std::move(segs), 1e-6);
}

PiecewiseLinear1D PiecewiseLinear1D::affine(double slope, double intercept) {
    PiecewiseLinear1D f;
    f.segments_.push_back({slope, intercept});
    return f;
}

double PiecewiseLinear1D::operator()(double x) const {
    const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
    return segments_[static_cast<std::size_t>(it - breakpoints_.begin())](x);
}

std::vector<double> PiecewiseLinear1D::slope_jumps() const {
    std::vector<double> jumps(breakpoints_.size());
    for (std::size_t i = 0; i < breakpoints_.size(); ++i) jumps[i] = segments_[i + 1].slope - segments_[i].slope;
    return jumps;
}

PiecewiseLinear1D PiecewiseLinear1D::plus_affine(double slope, double intercept) const {
    PiecewiseLinear1D f = *this;
    for (auto& s : f.segments_) {
        s.slope += slope;
        s.intercept += intercept;
    }
    return f;
}

double nonsmoothness_R(const PiecewiseLinear1D& f) {
    double total = 0.0;
    for (double j : f.slope_jumps()) total += std::abs(j);
    return total;
}

namespace {

// int_{alpha}^{beta} (A + B u)^2 phi(u) du
double quadratic_normal_moment(double A, double B, double alpha, double beta) {
    const double m0 = normal_interval_mass(alpha, beta, 0.0, 1.0);
    const double pa = std::isfinite(alpha) ? normal_pdf(alpha) : 0.0;
    const double pb = std::isfinite(beta) ? normal_pdf(beta) : 0.0;
    const double apa = std::isfinite(alpha) ? alpha * pa : 0.0;
    const double bpb = std::isfinite(beta) ? beta * pb : 0.0;
    const double m1 = pa - pb;
    const double m2 = m0 + apa - bpb;
    return A * A * m0 + 2.0 * A * B * m1 + B * B * m2;
}

}  // namespace

double gaussian_weighted_sq_diff(const PiecewiseLinear1D& f, const PiecewiseLinear1D& g, double mean, double sd) {
    if (!(sd > 0.0)) throw DomainError("standard deviation must be positive");
    std::vector<double> cuts;
    cuts.reserve(f.breakpoints().size() + g.breakpoints().size());
    std::merge(f.breakpoints().begin(), f.breakpoints().end(), g.breakpoints().begin(), g.breakpoints().end(),
               std::back_inserter(cuts));
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    constexpr double inf = std::numeric_limits<double>::infinity();
    double total = 0.0;
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
        const double lo = i == 0 ? -inf : cuts[i - 1];
        const double hi = i == cuts.size() ? inf : cuts[i];
        double probe;
        if (cuts.empty())
            probe = 0.0;
        else if (i == 0)
            probe = hi - 1.0;
        else if (i == cuts.size())
            probe = lo + 1.0;
        else
            probe = 0.5 * (lo + hi);
        const auto fi = std::upper_bound(f.breakpoints().begin(), f.breakpoints().end(), probe) - f.breakpoints().begin();
        const auto gi = std::upper_bound(g.breakpoints().begin(), g.breakpoints().end(), probe) - g.breakpoints().begin();
        const auto& fs = f.segments()[static_cast<std::size_t>(fi)];
        const auto& gs = g.segments()[static_cast<std::size_t>(gi)];
        const double a = fs.slope - gs.slope;
        const double c = fs.intercept - gs.intercept;
        // x = mean + sd u  =>  a x + c = (a mean + c) + (a sd) u
        total += quadratic_normal_moment(a * mean + c, a * sd, (lo - mean) / sd, (hi - mean) / sd);
    }
    return total;
}

PiecewiseLinear1D smoothed_as_pl(double t, double delta, const TrainingSet& ts) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(delta > 0.0) || !(delta < ts.half_spacing())) throw ParameterError("delta must lie in (0, Delta)");
    const std::size_t n = ts.size();
    std::vector<double> breaks;
    std::vector<PiecewiseLinear1D::Segment> segs;
    for (std::size_t k = 0; k < n; ++k) {
        const double y = ts.point(k);
        if (k > 0) breaks.push_back(y - delta);
        segs.push_back({-1.0 / t, y / t});
        if (k + 1 < n) {
            breaks.push_back(y + delta);
            const double slope = delta / ((ts.half_gap(k) - delta) * t);
            segs.push_back({slope, -slope * ts.midpoint(k)});
        }
    }
    return PiecewiseLinear1D::from_segments(std::move(breaks), std::move(segs));
}

std::vector<double> anchor_refined_knots(double t, const TrainingSet& ts, double window, std::size_t gap_knots) {
    const double sd = std::sqrt(t);
    const double h = 1e-3 * sd;
    std::vector<double> knots;
    const std::size_t n = ts.size();
    for (std::size_t k = 0; k < n; ++k) {
        const double y = ts.point(k);
        double lo = y - window * sd, hi = y + window * sd;
        if (k > 0) lo = std::max(lo, ts.midpoint(k - 1));
        if (k + 1 < n) hi = std::min(hi, ts.midpoint(k));
        if (k == 0) knots.push_back(lo - sd);
        const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / h));
        for (std::size_t i = 0; i <= count; ++i) knots.push_back(lo + (hi - lo) * static_cast<double>(i) / count);
        if (k + 1 < n) {
            const double next_lo = std::max(ts.point(k + 1) - window * sd, ts.midpoint(k));
            if (next_lo > hi) {
                for (std::size_t i = 1; i < gap_knots; ++i)
                    knots.push_back(hi + (next_lo - hi) * static_cast<double>(i) / gap_knots);
            }
        } else {
            knots.push_back(hi + sd);
        }
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return knots;
}

PiecewiseLinear1D interpolate_esf(double t, const TrainingSet& ts, std::span<const double> knots) {
    std::vector<double> ys(knots.size());
    for (std::size_t i = 0; i < knots.size(); ++i) ys[i] = esf_1d(knots[i], t, ts);
    return PiecewiseLinear1D::interpolate(knots, ys, -1.0 / t, -1.0 / t);
}

}  // namespace scoresmooth
