#include "scoresmooth/scorefield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scoresmooth/errors.hpp"
#include "scoresmooth/normal.hpp"

namespace scoresmooth {
namespace {

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time must be positive and finite, got " + std::to_string(t));
}

void check_point(double x) {
    if (!std::isfinite(x)) throw DomainError("evaluation point is not finite");
}

void check_dim(const Eigen::VectorXd& x, const TrainingSet& ts) {
    if (static_cast<std::size_t>(x.size()) != ts.ambient_dim())
        throw DomainError("point has dimension " + std::to_string(x.size()) + ", training set lives in R^" +
                          std::to_string(ts.ambient_dim()));
    for (Eigen::Index i = 0; i < x.size(); ++i) check_point(x(i));
}

}  // namespace

double SmoothingParams::delta_of(double t) const { return kappa * std::sqrt(t); }

double SmoothingParams::max_time(const TrainingSet& ts) const {
    const double r = ts.half_spacing() / kappa;
    return r * r;
}

void SmoothingParams::check_valid(double t, const TrainingSet& ts) const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw ParameterError("kappa must be positive");
    const double d = delta_of(t);
    if (!(d < ts.half_spacing()))
        throw ParameterError("delta_t = " + std::to_string(d) + " must be below the half spacing " +
                             std::to_string(ts.half_spacing()) + " (t < " + std::to_string(max_time(ts)) + ")");
}

double posterior_mean(double x, double t, const TrainingSet& ts) {
    check_point(x);
    check_time(t);
    const auto pts = ts.points();
    double shift = -std::numeric_limits<double>::infinity();
    for (double y : pts) shift = std::max(shift, -(x - y) * (x - y) / (2.0 * t));
    double num = 0.0, den = 0.0;
    for (double y : pts) {
        const double w = std::exp(-(x - y) * (x - y) / (2.0 * t) - shift);
        num += w * y;
        den += w;
    }
    return std::clamp(num / den, ts.front(), ts.back());
}

double esf_1d(double x, double t, const TrainingSet& ts) { return (posterior_mean(x, t, ts) - x) / t; }

double pl_esf(double x, double t, const TrainingSet& ts) {
    check_point(x);
    check_time(t);
    return (ts.point(ts.nearest_index(x)) - x) / t;
}

double smoothed_pl_esf(double x, double t, double delta, const TrainingSet& ts) {
    check_point(x);
    check_time(t);
    if (!(delta > 0.0)) throw ParameterError("delta must be positive");
    if (!(delta < ts.half_spacing()))
        throw ParameterError("delta = " + std::to_string(delta) + " must be below the half spacing " +
                             std::to_string(ts.half_spacing()));
    const std::size_t n = ts.size();
    const std::size_t k = ts.nearest_index(x);
    const double y = ts.point(k);
    const bool in_band = std::abs(x - y) <= delta || (k == 0 && x < y) || (k + 1 == n && x > y);
    if (in_band) return (y - x) / t;
    const std::size_t j = x > y ? k : k - 1;
    const double half_gap = ts.half_gap(j);
    return delta / (half_gap - delta) * (x - ts.midpoint(j)) / t;
}

Eigen::VectorXd esf_multi(const Eigen::VectorXd& x, double t, const TrainingSet& ts) {
    check_dim(x, ts);
    check_time(t);
    Eigen::VectorXd s = -x / t;
    s(0) = esf_1d(x(0), t, ts);
    return s;
}

Eigen::VectorXd smoothed_multi(const Eigen::VectorXd& x, double t, const SmoothingParams& sp, const TrainingSet& ts) {
    check_dim(x, ts);
    check_time(t);
    sp.check_valid(t, ts);
    Eigen::VectorXd s = -x / t;
    s(0) = smoothed_pl_esf(x(0), t, sp.delta_of(t), ts);
    return s;
}

Eigen::VectorXd empirical_score(const Eigen::VectorXd& x, double t, const Eigen::MatrixXd& anchors) {
    check_time(t);
    if (anchors.rows() != x.size()) throw DomainError("anchor dimension does not match the evaluation point");
    if (anchors.cols() < 1) throw ParameterError("need at least one anchor");
    for (Eigen::Index i = 0; i < x.size(); ++i) check_point(x(i));
    const Eigen::VectorXd logits = -(anchors.colwise() - x).colwise().squaredNorm().transpose() / (2.0 * t);
    const Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp().matrix();
    const Eigen::VectorXd mean = anchors * w / w.sum();
    return (mean - x) / t;
}

Eigen::VectorXd clip_score(const Eigen::VectorXd& s, double max_norm) {
    if (!(max_norm > 0.0)) throw ParameterError("max_norm must be positive");
    const double norm = s.norm();
    if (norm <= max_norm) return s;
    return s * (max_norm / norm);
}

double noised_empirical_pdf(double x, double t, const TrainingSet& ts) {
    check_time(t);
    const double sd = std::sqrt(t);
    double sum = 0.0;
    for (double y : ts.points()) sum += normal_pdf((x - y) / sd);
    return sum / (sd * static_cast<double>(ts.size()));
}

double noised_empirical_cdf(double x, double t, const TrainingSet& ts) {
    check_time(t);
    const double sd = std::sqrt(t);
    double sum = 0.0;
    for (double y : ts.points()) sum += normal_cdf((x - y) / sd);
    return sum / static_cast<double>(ts.size());
}

}  // namespace scoresmooth
