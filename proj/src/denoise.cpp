#include "scoresmooth/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "scoresmooth/errors.hpp"
#include "scoresmooth/quadrature.hpp"

namespace scoresmooth {

void NoiseSchedule::validate() const {
    if (!(t_min > 0.0) || !(t0 > t_min) || !std::isfinite(t0)) throw ParameterError("schedule needs 0 < t_min < t0");
    if (steps < 2) throw ParameterError("schedule needs at least 2 steps");
    if (!(rho > 0.0)) throw ParameterError("schedule rho must be positive");
}

std::vector<double> NoiseSchedule::times() const {
    validate();
    const double a = std::pow(std::sqrt(t0), 1.0 / rho);
    const double b = std::pow(std::sqrt(t_min), 1.0 / rho);
    std::vector<double> t(steps);
    for (std::size_t i = 0; i < steps; ++i) {
        const double sigma = std::pow(a + static_cast<double>(i) / static_cast<double>(steps - 1) * (b - a), rho);
        t[i] = sigma * sigma;
    }
    t.front() = t0;
    t.back() = t_min;
    return t;
}

Region region_of(double x, double t, const SmoothingParams& sp, const TrainingSet& ts) {
    const double delta = sp.delta_of(t);
    const std::size_t n = ts.size();
    const std::size_t k = ts.nearest_index(x);
    const double y = ts.point(k);
    if ((k == 0 && x < y + delta) || (k + 1 == n && x > y - delta) || std::abs(x - y) < delta) return {true, k};
    return {false, x > y ? k : k - 1};
}

namespace {

void check_times(double s, double t, const SmoothingParams& sp, const TrainingSet& ts) {
    if (!(s >= 0.0) || !(s <= t)) throw ParameterError("flow map needs 0 <= s <= t");
    sp.check_valid(t, ts);
}

}  // namespace

double flow_map(double x, double s, double t, const SmoothingParams& sp, const TrainingSet& ts) {
    if (!std::isfinite(x)) throw DomainError("flow map input must be finite");
    check_times(s, t, sp, ts);
    const Region r = region_of(x, t, sp, ts);
    if (r.band) {
        const double y = ts.point(r.index);
        return y + std::sqrt(s / t) * (x - y);
    }
    const double gap = ts.half_gap(r.index);
    const double z = ts.midpoint(r.index);
    return z + (x - z) * (gap - sp.delta_of(s)) / (gap - sp.delta_of(t));
}

Eigen::VectorXd flow_map_multi(const Eigen::VectorXd& x, double s, double t, const SmoothingParams& sp,
                               const TrainingSet& ts) {
    if (static_cast<std::size_t>(x.size()) != ts.ambient_dim()) throw DomainError("dimension mismatch");
    Eigen::VectorXd out = x * std::sqrt(s / t);
    out(0) = flow_map(x(0), s, t, sp, ts);
    return out;
}

DensityFn pushforward_density(double s, double t, DensityFn source, const SmoothingParams& sp, const TrainingSet& ts) {
    if (!(s > 0.0)) throw ParameterError("pushforward to s = 0 is singular; use terminal_decomposition");
    check_times(s, t, sp, ts);
    return [s, t, sp, ts, source = std::move(source)](double x) {
        const Region r = region_of(x, s, sp, ts);
        if (r.band) {
            const double y = ts.point(r.index);
            const double stretch = std::sqrt(t / s);
            return stretch * source(y + (x - y) * stretch);
        }
        const double gap = ts.half_gap(r.index);
        const double z = ts.midpoint(r.index);
        const double stretch = (gap - sp.delta_of(t)) / (gap - sp.delta_of(s));
        return stretch * source(z + (x - z) * stretch);
    };
}

SourceLaw noised_empirical_law(double t, const TrainingSet& ts) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    return {[t, ts](double x) { return noised_empirical_pdf(x, t, ts); },
            [t, ts](double x) { return noised_empirical_cdf(x, t, ts); }};
}

double TerminalDecomposition::atom_total() const {
    double s = 0.0;
    for (double a : atom_weights) s += a;
    return s;
}

TerminalDecomposition terminal_decomposition(double t, const SourceLaw& source, const SmoothingParams& sp,
                                             const TrainingSet& ts) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    sp.check_valid(t, ts);
    const double delta = sp.delta_of(t);
    const std::size_t n = ts.size();

    TerminalDecomposition out;
    out.anchors.assign(ts.points().begin(), ts.points().end());
    out.breaks = out.anchors;
    out.atom_weights.resize(n);
    // Without a distribution function, masses come from the density; the outer
    // bands are then cut off 40 sd past the extreme anchors.
    const double reach = 40.0 * std::sqrt(t);
    auto mass_between = [&](double a, double b) {
        if (source.cdf) {
            const double hi = std::isinf(b) ? 1.0 : source.cdf(b);
            const double lo = std::isinf(a) ? 0.0 : source.cdf(a);
            return hi - lo;
        }
        a = std::max(a, ts.front() - reach);
        b = std::min(b, ts.back() + reach);
        return adaptive_simpson(source.pdf, a, b, 1e-12);
    };
    for (std::size_t k = 0; k < n; ++k) {
        const double y = ts.point(k);
        const double upper = k + 1 == n ? INFINITY : y + delta;
        const double lower = k == 0 ? -INFINITY : y - delta;
        out.atom_weights[k] = mass_between(lower, upper);
    }
    for (std::size_t k = 0; k + 1 < n; ++k) out.smooth_mass += mass_between(ts.point(k) + delta, ts.point(k + 1) - delta);

    const double mass = out.smooth_mass;
    out.smooth_density = [ts, delta, mass, pdf = source.pdf](double x) {
        if (!(mass > 0.0) || x < ts.front() || x > ts.back()) return 0.0;
        const auto pts = ts.points();
        auto k = static_cast<std::size_t>(std::upper_bound(pts.begin(), pts.end(), x) - pts.begin());
        k = std::clamp<std::size_t>(k, 1, ts.size() - 1) - 1;
        const double gap = ts.half_gap(k);
        const double z = ts.midpoint(k);
        const double shrink = (gap - delta) / gap;
        return shrink * pdf(z + (x - z) * shrink) / mass;
    };
    return out;
}

const Snapshot& DenoiseRun::snapshot_near(double t) const {
    if (snapshots.empty()) throw ParameterError("run holds no snapshots");
    const auto it = std::min_element(snapshots.begin(), snapshots.end(), [t](const Snapshot& a, const Snapshot& b) {
        return std::abs(a.t - t) < std::abs(b.t - t);
    });
    return *it;
}

std::size_t DenoiseRun::step_near(double t) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < times.size(); ++i)
        if (std::abs(times[i] - t) < std::abs(times[best] - t)) best = i;
    return best;
}

namespace {

void record_step(DenoiseRun& run, std::size_t step, const Eigen::MatrixXd& x, const BackwardOptions& opt,
                 const std::vector<std::size_t>& snapshot_steps) {
    const auto d = x.rows();
    std::vector<Histogram> hists;
    hists.reserve(static_cast<std::size_t>(d));
    MarginalMoments mom;
    mom.mean = x.rowwise().mean();
    mom.sd.resize(d);
    for (Eigen::Index c = 0; c < d; ++c) {
        Histogram h(opt.hist_lo, opt.hist_hi, opt.hist_bins);
        for (Eigen::Index j = 0; j < x.cols(); ++j) h.add(x(c, j));
        hists.push_back(std::move(h));
        const double var = x.cols() > 1 ? (x.row(c).array() - mom.mean(c)).square().sum() / static_cast<double>(x.cols() - 1) : 0.0;
        mom.sd(c) = std::sqrt(var);
    }
    run.histograms.push_back(std::move(hists));
    run.moments.push_back(std::move(mom));
    if (std::find(snapshot_steps.begin(), snapshot_steps.end(), step) != snapshot_steps.end())
        run.snapshots.push_back({step, run.times[step], x});
}

}  // namespace

DenoiseRun integrate_backward(const ScoreField& field, const NoiseSchedule& schedule, const Eigen::MatrixXd& x_start,
                              std::uint64_t seed, const BackwardOptions& options) {
    if (static_cast<std::size_t>(x_start.rows()) != field.dim())
        throw DomainError("start states have dimension " + std::to_string(x_start.rows()) + ", field expects " +
                          std::to_string(field.dim()));
    if (x_start.cols() < 1) throw ParameterError("need at least one start state");
    if (options.batch < 1) throw ParameterError("batch size must be positive");

    DenoiseRun run;
    run.schedule = schedule;
    run.field = field.descriptor();
    run.seed = seed;
    run.times = schedule.times();

    std::vector<std::size_t> snapshot_steps;
    for (double ts : options.snapshot_times) snapshot_steps.push_back(run.step_near(ts));

    Eigen::MatrixXd x = x_start;
    if (!x.allFinite()) throw NumericError("non-finite start state");
    record_step(run, 0, x, options, snapshot_steps);

    const auto m = x.cols();
    const auto chunk = static_cast<Eigen::Index>(options.batch);
    Eigen::MatrixXd block, score;
    for (std::size_t i = 0; i + 1 < run.times.size(); ++i) {
        const double t = run.times[i];
        const double dt = run.times[i + 1] - t;
        for (Eigen::Index start = 0; start < m; start += chunk) {
            const Eigen::Index w = std::min(chunk, m - start);
            block = x.middleCols(start, w);
            field.evaluate_batch(block, t, score);
            x.middleCols(start, w) -= 0.5 * dt * score;
        }
        if (!x.allFinite())
            throw NumericError("non-finite state at step " + std::to_string(i + 1) + " (t = " + std::to_string(run.times[i + 1]) +
                               ") under field " + run.field);
        record_step(run, i + 1, x, options, snapshot_steps);
    }
    run.terminal = std::move(x);
    return run;
}

double kl_uniform(const DensityFn& p, double lo, double hi, std::span<const double> breaks, double tol) {
    if (!(hi > lo)) throw ParameterError("KL interval needs lo < hi");
    bool vanished = false;
    const double integral = integrate_piecewise(
        [&](double x) {
            const double v = p(x);
            if (!(v > 0.0)) {
                vanished = true;
                return 0.0;
            }
            return std::log(v);
        },
        lo, hi, breaks, tol);
    if (vanished) return std::numeric_limits<double>::infinity();
    const double len = hi - lo;
    return -std::log(len) - integral / len;
}

double kl_uniform(const DensityFn& p, double a, std::span<const double> breaks, double tol) {
    if (!(a > 0.0)) throw ParameterError("half width must be positive");
    return kl_uniform(p, -a, a, breaks, tol);
}

double kl_terminal_bound(double t0, double kappa) {
    const double shrink = 1.0 - kappa * std::sqrt(t0);
    if (!(t0 > 0.0) || !(shrink > 0.0)) throw ParameterError("bound needs kappa sqrt(t0) < 1");
    return 1.0 / (3.0 * t0 * shrink) + std::log(std::sqrt(t0) / shrink) + std::log(2.0 * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace scoresmooth
