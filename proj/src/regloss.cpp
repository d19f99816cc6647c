#include "scoresmooth/regloss.hpp"

#include <cmath>
#include <limits>

#include "scoresmooth/errors.hpp"
#include "scoresmooth/normal.hpp"
#include "scoresmooth/quadrature.hpp"
#include "scoresmooth/sampling.hpp"
#include "scoresmooth/scorefield.hpp"

namespace scoresmooth {

double F_kappa(double kappa) {
    if (!(kappa >= 0.0)) throw DomainError("F is defined for kappa >= 0");
    if (std::isinf(kappa)) return 0.0;
    return 2.0 * ((1.0 + kappa * kappa) * normal_upper_tail(kappa) - kappa * normal_pdf(kappa));
}

double F_inverse(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("F_inverse needs eps in (0, 1)");
    double lo = 0.0, hi = 40.0;
    // F is decreasing: F(lo) > eps >= F(hi).
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (F_kappa(mid) > eps)
            lo = mid;
        else
            hi = mid;
    }
    return std::abs(F_kappa(lo) - eps) <= std::abs(F_kappa(hi) - eps) ? lo : hi;
}

McEstimate score_matching_loss_mc(const ScoreField& f, double t, const TrainingSet& ts, std::size_t n_samples,
                                  std::uint64_t seed) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
    if (n_samples < 1) throw ParameterError("n_samples must be >= 1");
    if (f.dim() != ts.ambient_dim()) throw DomainError("score field and training set dimensions differ");

    constexpr std::size_t chunk = 8192;
    Rng rng(seed);
    Eigen::MatrixXd pred;
    double mean = 0.0, m2 = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < n_samples; start += chunk) {
        const std::size_t m = std::min(chunk, n_samples - start);
        const Eigen::MatrixXd x = sample_noised_empirical(t, ts, m, rng);
        f.evaluate_batch(x, t, pred);
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const Eigen::VectorXd target = esf_multi(x.col(j), t, ts);
            const double v = t * (pred.col(j) - target).squaredNorm();
            if (!std::isfinite(v)) throw NumericError("non-finite loss term at sample " + std::to_string(start + j));
            ++seen;
            const double d = v - mean;
            mean += d / static_cast<double>(seen);
            m2 += d * (v - mean);
        }
    }
    McEstimate out;
    out.value = mean;
    out.std_error = seen > 1 ? std::sqrt(m2 / static_cast<double>(seen - 1) / static_cast<double>(seen)) : 0.0;
    return out;
}

double weighted_sq_distance(const std::function<double(double)>& f, const std::function<double(double)>& g, double t,
                            const TrainingSet& ts, std::size_t nodes) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
    if (nodes < 16) throw ParameterError("quadrature needs at least 16 nodes");
    const double value = noised_empirical_expectation(
        [&](double x) {
            const double d = f(x) - g(x);
            return d * d;
        },
        t, ts, nodes);
    if (!std::isfinite(value)) throw NumericError("non-finite quadrature integrand");
    return value;
}

double score_matching_loss_quad(const std::function<double(double)>& f, double t, const TrainingSet& ts,
                                std::size_t nodes) {
    return t * weighted_sq_distance(f, [&](double x) { return esf_1d(x, t, ts); }, t, ts, nodes);
}

double score_matching_loss_quad(const PiecewiseLinear1D& f, double t, const TrainingSet& ts, std::size_t nodes) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
    if (nodes < 16) throw ParameterError("quadrature needs at least 16 nodes");
    std::vector<double> breaks(f.breakpoints().begin(), f.breakpoints().end());
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) breaks.push_back(ts.midpoint(k));
    const double sd = std::sqrt(t);
    const auto sq = [&](double x) {
        const double d = f(x) - esf_1d(x, t, ts);
        return d * d;
    };
    double sum = 0.0;
    for (double y : ts.points()) sum += gaussian_expectation_split(sq, y, sd, breaks, nodes);
    const double value = t * sum / static_cast<double>(ts.size());
    if (!std::isfinite(value)) throw NumericError("non-finite quadrature integrand");
    return value;
}

double smoothed_nonsmoothness_closed_form(double t, double delta, const TrainingSet& ts) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(delta > 0.0) || !(delta < ts.half_spacing())) throw ParameterError("delta must lie in (0, Delta)");
    if (ts.is_uniform()) {
        const double gap = ts.half_spacing();
        return 2.0 * static_cast<double>(ts.size() - 1) * gap / (t * (gap - delta));
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
        const double gap = ts.half_gap(k);
        total += 2.0 * gap / (t * (gap - delta));
    }
    return total;
}

double nonsmoothness_lower_bound(double eps, double t, std::size_t n) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    if (!(eps > 0.0)) throw ParameterError("eps must be positive");
    const double nn = static_cast<double>(n);
    return 2.0 * (nn - 1.0 - 2.0 * nn * std::sqrt(eps)) / t;
}

OptimalityReport optimality_report(double eps, double kappa, double t, const TrainingSet& ts, std::size_t nodes) {
    if (!(eps > 0.0 && eps < 0.015)) throw ParameterError("eps must lie in (0, 0.015)");
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive");
    const double kappa_min = F_inverse(eps);
    if (!(kappa >= kappa_min))
        throw ParameterError("kappa = " + std::to_string(kappa) + " is below F_inverse(eps) = " + std::to_string(kappa_min));
    const SmoothingParams sp{kappa};
    sp.check_valid(t, ts);

    OptimalityReport r;
    r.epsilon = eps;
    r.kappa = kappa;
    r.t = t;
    r.n = ts.size();
    r.delta = sp.delta_of(t);
    const PiecewiseLinear1D s = smoothed_as_pl(t, r.delta, ts);
    r.loss_value = score_matching_loss_quad(s, t, ts, nodes);
    r.r_candidate = nonsmoothness_R(s);
    r.r_closed_form = smoothed_nonsmoothness_closed_form(t, r.delta, ts);
    r.r_lower_bound = nonsmoothness_lower_bound(eps, t, ts.size());
    r.ratio = r.r_candidate / r.r_lower_bound;
    r.feasible = r.loss_value < eps;
    r.near_optimal = r.ratio < 1.0 + 8.0 * std::sqrt(eps);
    return r;
}

std::vector<ConvergenceRow> lemma1_convergence_check(double kappa, const TrainingSet& ts, std::span<const double> t_grid,
                                                     std::size_t nodes) {
    if (!(kappa > 0.0)) throw ParameterError("kappa must be positive");
    const SmoothingParams sp{kappa};
    const double n = static_cast<double>(ts.size());
    const double limit = (n - 1.0) / n * F_kappa(kappa);
    std::vector<ConvergenceRow> rows;
    rows.reserve(t_grid.size());
    for (double t : t_grid) {
        sp.check_valid(t, ts);
        const PiecewiseLinear1D s = smoothed_as_pl(t, sp.delta_of(t), ts);
        ConvergenceRow row;
        row.t = t;
        row.loss = score_matching_loss_quad(s, t, ts, nodes);
        row.limit = limit;
        row.residual = std::abs(row.loss - limit);
        row.residual_over_sqrt_t = row.residual / std::sqrt(t);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace scoresmooth
