#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace scoresmooth {

/// Anchor points on the first coordinate axis of R^d.
///
/// Points are kept sorted and strictly increasing. Uniform sets span [-D, D]
/// with y_k = 2(k-1)Delta - D, Delta = D/(n-1), and midpoints z_k = y_k + Delta.
/// Non-uniform sets use per-cell half gaps (y_{k+1} - y_k)/2 wherever the
/// uniform Delta would appear.
class TrainingSet {
public:
    static TrainingSet uniform(std::size_t n, double half_width = 1.0, std::size_t ambient_dim = 1);
    static TrainingSet from_points(std::vector<double> points, std::size_t ambient_dim = 1);

    std::size_t size() const { return points_.size(); }
    std::size_t ambient_dim() const { return ambient_dim_; }
    bool is_uniform() const { return uniform_; }

    std::span<const double> points() const { return points_; }
    double point(std::size_t k) const { return points_[k]; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }

    /// D: half the extent of the set, (y_n - y_1)/2.
    double half_width() const { return half_width_; }
    /// Delta: half the anchor gap for uniform sets; the smallest half gap otherwise.
    double half_spacing() const { return min_half_gap_; }
    /// (y_{k+1} - y_k)/2 for k in [0, n-2]; exactly Delta for uniform sets.
    double half_gap(std::size_t k) const { return uniform_ ? min_half_gap_ : 0.5 * (points_[k + 1] - points_[k]); }
    /// z_k = y_k + Delta for uniform sets, (y_k + y_{k+1})/2 otherwise.
    double midpoint(std::size_t k) const { return uniform_ ? points_[k] + min_half_gap_ : 0.5 * (points_[k] + points_[k + 1]); }

    /// Index of the anchor whose Voronoi cell contains x; ties at a midpoint go left.
    std::size_t nearest_index(double x) const;

    /// Embedding of anchor k into R^d (other coordinates zero).
    Eigen::VectorXd embedded(std::size_t k) const;

    /// Copy of this set with a different ambient dimension.
    TrainingSet with_ambient_dim(std::size_t d) const;

private:
    TrainingSet(std::vector<double> points, std::size_t ambient_dim, bool uniform);

    std::vector<double> points_;
    std::size_t ambient_dim_ = 1;
    bool uniform_ = false;
    double min_half_gap_ = 0.0;
    double half_width_ = 0.0;
};

}  // namespace scoresmooth
