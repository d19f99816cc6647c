#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

using Rng = std::mt19937_64;

/// Per-task seed: splitmix64 of (seed, index). Every random stream in a run is
/// derived from the top-level seed this way, so results do not depend on the
/// order in which tasks execute.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

/// `count` draws from the noised empirical distribution at time t, as the
/// columns of a d x count matrix (anchor uniformly, then N(0, t) per coordinate).
Eigen::MatrixXd sample_noised_empirical(double t, const TrainingSet& ts, std::size_t count, std::uint64_t seed);

/// Same, drawing from an existing generator.
Eigen::MatrixXd sample_noised_empirical(double t, const TrainingSet& ts, std::size_t count, Rng& rng);

/// Draws for anchors in general position (columns of `anchors`).
Eigen::MatrixXd sample_noised_points(double t, const Eigen::MatrixXd& anchors, std::size_t count, Rng& rng);

}  // namespace scoresmooth
