#include "scoresmooth/training_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "scoresmooth/errors.hpp"

namespace scoresmooth {

TrainingSet::TrainingSet(std::vector<double> points, std::size_t ambient_dim, bool uniform)
    : points_(std::move(points)), ambient_dim_(ambient_dim), uniform_(uniform) {
    half_width_ = 0.5 * (points_.back() - points_.front());
    min_half_gap_ = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < points_.size(); ++k) min_half_gap_ = std::min(min_half_gap_, 0.5 * (points_[k + 1] - points_[k]));
}

TrainingSet TrainingSet::uniform(std::size_t n, double half_width, std::size_t ambient_dim) {
    if (n < 2) throw ParameterError("training set needs at least 2 points");
    if (!(half_width > 0.0) || !std::isfinite(half_width)) throw ParameterError("half_width must be positive");
    if (ambient_dim < 1) throw ParameterError("ambient_dim must be >= 1");
    const double delta = half_width / static_cast<double>(n - 1);
    std::vector<double> pts(n);
    for (std::size_t k = 0; k < n; ++k) pts[k] = 2.0 * static_cast<double>(k) * delta - half_width;
    TrainingSet ts(std::move(pts), ambient_dim, true);
    ts.min_half_gap_ = delta;
    ts.half_width_ = half_width;
    return ts;
}

TrainingSet TrainingSet::from_points(std::vector<double> points, std::size_t ambient_dim) {
    if (points.size() < 2) throw ParameterError("training set needs at least 2 points");
    if (ambient_dim < 1) throw ParameterError("ambient_dim must be >= 1");
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (!std::isfinite(points[k])) throw ParameterError("training point " + std::to_string(k) + " is not finite");
        if (k > 0 && !(points[k] > points[k - 1]))
            throw ParameterError("training points must be strictly increasing (index " + std::to_string(k) + ")");
    }
    return TrainingSet(std::move(points), ambient_dim, false);
}

std::size_t TrainingSet::nearest_index(double x) const {
    // first midpoint >= x; x == z_k stays in cell k
    std::size_t lo = 0, hi = points_.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (x <= midpoint(mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    return lo;
}

Eigen::VectorXd TrainingSet::embedded(std::size_t k) const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ambient_dim_));
    v(0) = points_[k];
    return v;
}

TrainingSet TrainingSet::with_ambient_dim(std::size_t d) const {
    if (d < 1) throw ParameterError("ambient_dim must be >= 1");
    TrainingSet copy = *this;
    copy.ambient_dim_ = d;
    return copy;
}

}  // namespace scoresmooth
