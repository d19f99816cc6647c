#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "scoresmooth/scorefield.hpp"
#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

enum class ScoreVariant { Empirical, PiecewiseLinear, Smoothed, Neural, Zero, PointCloud };

std::string to_string(ScoreVariant v);

/// Maps (x in R^d, t > 0) to a score vector. Implementations are immutable
/// after construction, so one instance can be shared across threads.
///
/// Batches are column-major: each column of `x` is one point.
class ScoreField {
public:
    virtual ~ScoreField() = default;

    virtual ScoreVariant variant() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::string descriptor() const = 0;

    virtual Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const = 0;

    /// Evaluates every column of x; the default loops over evaluate().
    virtual void evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const;

    Eigen::VectorXd operator()(const Eigen::VectorXd& x, double t) const { return evaluate(x, t); }
};

/// Exact empirical score, optionally truncated to norm clip_factor/t.
class EmpiricalScoreField final : public ScoreField {
public:
    explicit EmpiricalScoreField(TrainingSet ts, std::optional<double> clip_factor = std::nullopt);

    ScoreVariant variant() const override { return ScoreVariant::Empirical; }
    std::size_t dim() const override { return ts_.ambient_dim(); }
    std::string descriptor() const override;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;
    void evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const override;

private:
    TrainingSet ts_;
    std::optional<double> clip_factor_;
};

class PiecewiseLinearScoreField final : public ScoreField {
public:
    explicit PiecewiseLinearScoreField(TrainingSet ts) : ts_(std::move(ts)) {}

    ScoreVariant variant() const override { return ScoreVariant::PiecewiseLinear; }
    std::size_t dim() const override { return ts_.ambient_dim(); }
    std::string descriptor() const override { return "pl-esf"; }
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;

private:
    TrainingSet ts_;
};

class SmoothedScoreField final : public ScoreField {
public:
    SmoothedScoreField(TrainingSet ts, SmoothingParams sp) : ts_(std::move(ts)), sp_(sp) {}

    ScoreVariant variant() const override { return ScoreVariant::Smoothed; }
    std::size_t dim() const override { return ts_.ambient_dim(); }
    std::string descriptor() const override;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;
    void evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const override;
    const SmoothingParams& smoothing() const { return sp_; }

private:
    TrainingSet ts_;
    SmoothingParams sp_;
};

class ZeroScoreField final : public ScoreField {
public:
    explicit ZeroScoreField(std::size_t dim) : dim_(dim) {}

    ScoreVariant variant() const override { return ScoreVariant::Zero; }
    std::size_t dim() const override { return dim_; }
    std::string descriptor() const override { return "zero"; }
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;

private:
    std::size_t dim_;
};

/// Empirical score of anchors in general position (e.g. points on a circle).
class PointCloudScoreField final : public ScoreField {
public:
    explicit PointCloudScoreField(Eigen::MatrixXd anchors, std::optional<double> clip_factor = std::nullopt);

    ScoreVariant variant() const override { return ScoreVariant::PointCloud; }
    std::size_t dim() const override { return static_cast<std::size_t>(anchors_.rows()); }
    std::string descriptor() const override;
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;

    const Eigen::MatrixXd& anchors() const { return anchors_; }

private:
    Eigen::MatrixXd anchors_;
    std::optional<double> clip_factor_;
};

}  // namespace scoresmooth
