#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace scoresmooth {

/// Fixed-width bins on [lo, hi); values outside land in underflow/overflow.
class Histogram {
public:
    Histogram() = default;
    Histogram(double lo, double hi, std::size_t bins);

    void add(double x);
    void merge(const Histogram& other);

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    std::size_t bins() const { return counts_.size(); }
    double width() const { return (hi_ - lo_) / static_cast<double>(counts_.size()); }
    double left_edge(std::size_t i) const { return lo_ + width() * static_cast<double>(i); }
    double center(std::size_t i) const { return left_edge(i) + 0.5 * width(); }

    const std::vector<std::uint64_t>& counts() const { return counts_; }
    std::uint64_t underflow() const { return underflow_; }
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t total() const;

    /// Counts divided by (total * width); includes out-of-range samples in the total.
    std::vector<double> density() const;

private:
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<std::uint64_t> counts_;
    std::uint64_t underflow_ = 0;
    std::uint64_t overflow_ = 0;
};

}  // namespace scoresmooth
