#include "scoresmooth/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

#include <Eigen/Eigenvalues>

#include "scoresmooth/errors.hpp"

namespace scoresmooth {

namespace {

// Nodes and weights from the Jacobi matrix of a symmetric weight with total mass mu0.
QuadratureRule golub_welsch(std::size_t nodes, const std::function<double(std::size_t)>& offdiag, double mu0) {
    const auto n = static_cast<Eigen::Index>(nodes);
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(std::max<Eigen::Index>(n - 1, 0));
    for (Eigen::Index i = 0; i + 1 < n; ++i) sub(i) = offdiag(static_cast<std::size_t>(i + 1));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw NumericError("quadrature eigen solve failed");

    QuadratureRule rule;
    rule.nodes.resize(nodes);
    rule.weights.resize(nodes);
    for (Eigen::Index i = 0; i < n; ++i) {
        rule.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
        const double v0 = solver.eigenvectors()(0, i);
        rule.weights[static_cast<std::size_t>(i)] = mu0 * v0 * v0;
    }
    // the spectrum is symmetric; enforce it exactly
    for (std::size_t i = 0; i < nodes / 2; ++i) {
        const std::size_t j = nodes - 1 - i;
        const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
        const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
        rule.nodes[i] = -x;
        rule.nodes[j] = x;
        rule.weights[i] = rule.weights[j] = w;
    }
    if (nodes % 2 == 1) rule.nodes[nodes / 2] = 0.0;
    return rule;
}

const QuadratureRule& cached_rule(char family, std::size_t nodes) {
    static std::mutex mu;
    static std::map<std::pair<char, std::size_t>, QuadratureRule> cache;
    if (nodes < 1) throw ParameterError("quadrature rule needs at least one node");
    std::lock_guard lock(mu);
    const auto key = std::make_pair(family, nodes);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    QuadratureRule rule =
        family == 'H'
            ? golub_welsch(nodes, [](std::size_t i) { return std::sqrt(0.5 * static_cast<double>(i)); },
                           std::sqrt(std::numbers::pi))
            : golub_welsch(nodes,
                           [](std::size_t i) {
                               const double k = static_cast<double>(i);
                               return k / std::sqrt(4.0 * k * k - 1.0);
                           },
                           2.0);
    return cache.emplace(key, std::move(rule)).first->second;
}

}  // namespace

const QuadratureRule& gauss_hermite(std::size_t nodes) { return cached_rule('H', nodes); }

const QuadratureRule& gauss_legendre(std::size_t nodes) { return cached_rule('L', nodes); }

double gaussian_expectation(const std::function<double(double)>& h, double mean, double sd, std::size_t nodes) {
    const auto& rule = gauss_hermite(nodes);
    const double scale = std::numbers::sqrt2 * sd;
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * h(mean + scale * rule.nodes[i]);
    return sum / std::sqrt(std::numbers::pi);
}

double gaussian_expectation_split(const std::function<double(double)>& h, double mean, double sd,
                                  std::span<const double> breaks, std::size_t panel_nodes) {
    if (!(sd > 0.0)) throw DomainError("standard deviation must be positive");
    constexpr double kWindow = 16.0;
    const double a = mean - kWindow * sd, b = mean + kWindow * sd;
    std::vector<double> cuts{a, b};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    const auto& rule = gauss_legendre(panel_nodes);
    const double norm = 1.0 / (sd * std::sqrt(2.0 * std::numbers::pi));
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const auto pieces = static_cast<std::size_t>(std::ceil((cuts[i + 1] - cuts[i]) / sd));
        const double w = (cuts[i + 1] - cuts[i]) / static_cast<double>(pieces);
        for (std::size_t p = 0; p < pieces; ++p) {
            const double lo = cuts[i] + w * static_cast<double>(p);
            const double half = 0.5 * w, mid = lo + half;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double x = mid + half * rule.nodes[q];
                const double u = (x - mean) / sd;
                sum += half * rule.weights[q] * norm * std::exp(-0.5 * u * u) * h(x);
            }
        }
    }
    return sum;
}

double noised_empirical_expectation(const std::function<double(double)>& h, double t, const TrainingSet& ts,
                                    std::size_t nodes) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    const double sd = std::sqrt(t);
    double sum = 0.0;
    for (double y : ts.points()) sum += gaussian_expectation(h, y, sd, nodes);
    return sum / static_cast<double>(ts.size());
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double m, double fm, double b,
                    double fb, double whole, double tol, int depth) {
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    if (b < a) return -adaptive_simpson(f, b, a, tol, max_depth);
    // a fixed 16-panel pre-split keeps narrow features from hiding between the first samples
    constexpr int kPanels = 16;
    double total = 0.0;
    const double width = (b - a) / kPanels;
    for (int p = 0; p < kPanels; ++p) {
        const double lo = a + width * p;
        const double hi = p + 1 == kPanels ? b : a + width * (p + 1);
        const double m = 0.5 * (lo + hi);
        const double flo = f(lo), fm = f(m), fhi = f(hi);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += simpson_step(f, lo, flo, m, fm, hi, fhi, whole, tol / kPanels, max_depth);
    }
    if (!std::isfinite(total)) throw NumericError("adaptive Simpson produced a non-finite value");
    return total;
}

double integrate_piecewise(const std::function<double(double)>& f, double a, double b, std::span<const double> breaks,
                           double tol) {
    std::vector<double> cuts{a};
    for (double c : breaks)
        if (c > a && c < b) cuts.push_back(c);
    cuts.push_back(b);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    const double per = tol / static_cast<double>(cuts.size() - 1);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += adaptive_simpson(f, cuts[i], cuts[i + 1], per);
    return total;
}

}  // namespace scoresmooth
