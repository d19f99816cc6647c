#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

/// Nodes and weights; for Gauss-Hermite sum_i w_i f(x_i) ~ int f(x) exp(-x^2) dx.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Golub-Welsch construction; results are cached per node count.
const QuadratureRule& gauss_hermite(std::size_t nodes);

/// Gauss-Legendre rule on [-1, 1], same construction and caching.
const QuadratureRule& gauss_legendre(std::size_t nodes);

/// E[h(X)] for X ~ N(mean, sd^2) using the Gauss-Hermite rule.
double gaussian_expectation(const std::function<double(double)>& h, double mean, double sd, std::size_t nodes);

/// E[h(X)] for X ~ N(mean, sd^2) when h has kinks: Gauss-Legendre panels of
/// at most one standard deviation over mean +- 16 sd, split at `breaks`.
double gaussian_expectation_split(const std::function<double(double)>& h, double mean, double sd,
                                  std::span<const double> breaks, std::size_t panel_nodes);

/// E[h(X)] for X drawn from the noised empirical distribution at time t,
/// one Gauss-Hermite rule per mixture component.
double noised_empirical_expectation(const std::function<double(double)>& h, double t, const TrainingSet& ts,
                                    std::size_t nodes);

/// Adaptive Simpson on [a, b] with absolute tolerance `tol`.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth = 40);

/// Adaptive Simpson split at the given interior points (kinks of f).
double integrate_piecewise(const std::function<double(double)>& f, double a, double b, std::span<const double> breaks,
                           double tol);

}  // namespace scoresmooth
