#include "scoresmooth/sampling.hpp"

#include <cmath>

#include "scoresmooth/errors.hpp"

namespace scoresmooth {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Eigen::MatrixXd sample_noised_empirical(double t, const TrainingSet& ts, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    return sample_noised_empirical(t, ts, count, rng);
}

Eigen::MatrixXd sample_noised_empirical(double t, const TrainingSet& ts, std::size_t count, Rng& rng) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("sampling time must be non-negative");
    if (count < 1) throw ParameterError("sample count must be >= 1");
    const auto d = static_cast<Eigen::Index>(ts.ambient_dim());
    const double sd = std::sqrt(t);
    std::uniform_int_distribution<std::size_t> pick(0, ts.size() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::MatrixXd out(d, static_cast<Eigen::Index>(count));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double y = ts.point(pick(rng));
        for (Eigen::Index i = 0; i < d; ++i) out(i, j) = (i == 0 ? y : 0.0) + sd * noise(rng);
    }
    return out;
}

Eigen::MatrixXd sample_noised_points(double t, const Eigen::MatrixXd& anchors, std::size_t count, Rng& rng) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw DomainError("sampling time must be non-negative");
    if (count < 1) throw ParameterError("sample count must be >= 1");
    const double sd = std::sqrt(t);
    std::uniform_int_distribution<Eigen::Index> pick(0, anchors.cols() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    Eigen::MatrixXd out(anchors.rows(), static_cast<Eigen::Index>(count));
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const Eigen::Index k = pick(rng);
        for (Eigen::Index i = 0; i < anchors.rows(); ++i) out(i, j) = anchors(i, k) + sd * noise(rng);
    }
    return out;
}

}  // namespace scoresmooth
