#include "scoresmooth/histogram.hpp"

#include <cmath>

#include "scoresmooth/errors.hpp"

namespace scoresmooth {

Histogram::Histogram(double lo, double hi, std::size_t bins) : lo_(lo), hi_(hi), counts_(bins, 0) {
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi)) throw ParameterError("histogram range must satisfy lo < hi");
    if (bins < 1) throw ParameterError("histogram needs at least one bin");
}

void Histogram::add(double x) {
    if (x < lo_) {
        ++underflow_;
        return;
    }
    const auto i = static_cast<std::size_t>((x - lo_) / width());
    if (x >= hi_ || i >= counts_.size()) {
        ++overflow_;
        return;
    }
    ++counts_[i];
}

void Histogram::merge(const Histogram& other) {
    if (other.lo_ != lo_ || other.hi_ != hi_ || other.counts_.size() != counts_.size())
        throw ParameterError("cannot merge histograms with different binning");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    underflow_ += other.underflow_;
    overflow_ += other.overflow_;
}

std::uint64_t Histogram::total() const {
    std::uint64_t s = underflow_ + overflow_;
    for (auto c : counts_) s += c;
    return s;
}

std::vector<double> Histogram::density() const {
    const double n = static_cast<double>(total());
    std::vector<double> d(counts_.size(), 0.0);
    if (n == 0.0) return d;
    for (std::size_t i = 0; i < counts_.size(); ++i) d[i] = static_cast<double>(counts_[i]) / (n * width());
    return d;
}

}  // namespace scoresmooth
