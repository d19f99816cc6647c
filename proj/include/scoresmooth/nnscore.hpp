#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scoresmooth/score_field.hpp"
#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

/// A named contiguous slice of a model's flat parameter vector.
struct ParamGroup {
    std::string name;
    std::size_t offset = 0;
    std::size_t size = 0;
    bool decay = false;
};

enum class MlpArch { FixedTime, TimeConditioned };

std::string to_string(MlpArch a);

/// Intermediate activations kept by forward() for backward().
struct ForwardCache {
    std::vector<Eigen::MatrixXd> mats;
    Eigen::RowVectorXd aux;
};

/// Small MLP score model with a flat parameter vector. Batches are d x m.
class MlpScoreModel {
public:
    virtual ~MlpScoreModel() = default;

    virtual MlpArch arch() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::size_t hidden() const = 0;
    virtual bool time_conditioned() const = 0;
    virtual std::unique_ptr<MlpScoreModel> clone() const = 0;

    /// `t` holds one time per column for time-conditioned models and is
    /// ignored (may be empty) otherwise. With a cache, keeps what backward() needs.
    virtual void forward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out,
                         ForwardCache* cache = nullptr) const = 0;

    /// Accumulates d(loss)/d(params) into grad given d(loss)/d(out).
    virtual void backward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, const ForwardCache& cache,
                          const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const = 0;

    Eigen::VectorXd& params() { return params_; }
    const Eigen::VectorXd& params() const { return params_; }
    const std::vector<ParamGroup>& groups() const { return groups_; }
    std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
    const ParamGroup& group(const std::string& name) const;

    /// Single-point convenience; `t` is ignored by fixed-time models.
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const;

protected:
    std::size_t add_group(const std::string& name, std::size_t size, bool decay);
    Eigen::Map<Eigen::MatrixXd> mat(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    Eigen::Map<const Eigen::MatrixXd> mat(const std::string& name, Eigen::Index rows, Eigen::Index cols) const;

    Eigen::VectorXd params_;
    std::vector<ParamGroup> groups_;
};

/// skip(x) + W2 relu(W1 x + b1) + b2, trained at one fixed time. The affine
/// skip map is not weight-decayed.
class FixedTimeMlp final : public MlpScoreModel {
public:
    FixedTimeMlp(std::size_t dim, std::size_t hidden, std::uint64_t seed);

    MlpArch arch() const override { return MlpArch::FixedTime; }
    std::size_t dim() const override { return dim_; }
    std::size_t hidden() const override { return hidden_; }
    bool time_conditioned() const override { return false; }
    std::unique_ptr<MlpScoreModel> clone() const override { return std::make_unique<FixedTimeMlp>(*this); }

    void forward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out,
                 ForwardCache* cache = nullptr) const override;
    void backward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, const ForwardCache& cache,
                  const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const override;

private:
    std::size_t dim_;
    std::size_t hidden_;
};

/// Three two-layer blocks. A shared first layer h = relu(a log t + c) feeds
/// block 1 (time embedding e) and block 3 (modulation m); block 2 maps
/// [x; e] to o. The score is o * (1 + m) / sqrt(t). Only block 2 decays.
class TimeConditionedMlp final : public MlpScoreModel {
public:
    TimeConditionedMlp(std::size_t dim, std::size_t hidden, std::size_t embed, std::uint64_t seed);

    MlpArch arch() const override { return MlpArch::TimeConditioned; }
    std::size_t dim() const override { return dim_; }
    std::size_t hidden() const override { return hidden_; }
    std::size_t embed() const { return embed_; }
    bool time_conditioned() const override { return true; }
    std::unique_ptr<MlpScoreModel> clone() const override { return std::make_unique<TimeConditionedMlp>(*this); }

    void forward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out,
                 ForwardCache* cache = nullptr) const override;
    void backward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, const ForwardCache& cache,
                  const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const override;

    /// Output before the 1/sqrt(t) scaling.
    void forward_unscaled(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out) const;

private:
    std::size_t dim_;
    std::size_t hidden_;
    std::size_t embed_;
};

/// Regression loss mean_j t_j ||f(x_j, t_j) - target_j||^2 and its gradient.
double batch_loss(const MlpScoreModel& model, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t,
                  const Eigen::MatrixXd& target, Eigen::VectorXd* grad = nullptr);

struct AdamWConfig {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct AdamWState {
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    std::size_t step = 0;
};

/// One AdamW update. Decay theta <- theta (1 - lr lambda) applies to groups
/// whose mask entry is set; then the bias-corrected Adam step. Non-finite
/// gradients throw NumericError.
void adamw_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const std::vector<ParamGroup>& groups,
                const std::vector<bool>& decay_mask, const AdamWConfig& cfg, AdamWState& state);

/// Decay mask from each group's default decay flag.
std::vector<bool> default_decay_mask(const MlpScoreModel& model);

enum class TimeSampling { Fixed, CubeRootUniform };

struct TrainConfig {
    AdamWConfig optimizer;
    std::size_t batch = 1024;
    std::size_t steps = 6000;
    std::uint64_t seed = 0;
    TimeSampling time_sampling = TimeSampling::Fixed;
    double t_fixed = 0.05;
    double t_lo = 1e-6;
    double t_hi = 0.02;
    /// Empty means the model's default mask.
    std::vector<bool> decay_mask;
    std::size_t hidden = 256;
    std::size_t embed = 16;
    /// Loss curve stride; every step's loss still enters the averages.
    std::size_t log_every = 50;

    void validate() const;
};

struct LossPoint {
    std::size_t step = 0;
    double loss = 0.0;
};

struct TrainResult {
    std::unique_ptr<MlpScoreModel> model;
    std::vector<LossPoint> curve;
    /// Mean loss over the first and last min(1000, steps) steps.
    double head_loss = 0.0;
    double tail_loss = 0.0;
    double final_loss = 0.0;
};

/// Fixed-time training on fresh draws from the noised empirical distribution.
/// Loss above 1e6 aborts with NumericError.
TrainResult train_fixed_t(const TrainingSet& ts, double t, const TrainConfig& cfg);

/// Time-conditioned training with t^(1/3) uniform on [t_lo^(1/3), t_hi^(1/3)].
TrainResult train_time_conditioned(const TrainingSet& ts, const TrainConfig& cfg);

/// Same for anchors in general position (columns of `anchors`).
TrainResult train_time_conditioned(const Eigen::MatrixXd& anchors, const TrainConfig& cfg);

/// Adapts a trained model to the ScoreField interface.
class NeuralScoreField final : public ScoreField {
public:
    explicit NeuralScoreField(std::shared_ptr<const MlpScoreModel> model, std::string label = "nn");

    ScoreVariant variant() const override { return ScoreVariant::Neural; }
    std::size_t dim() const override { return model_->dim(); }
    std::string descriptor() const override { return label_; }
    Eigen::VectorXd evaluate(const Eigen::VectorXd& x, double t) const override;
    void evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const override;

private:
    std::shared_ptr<const MlpScoreModel> model_;
    std::string label_;
};

struct DeltaFit {
    double best_delta = 0.0;
    std::vector<double> grid;
    /// E_{p_t}[(f - s_delta)^2] per grid entry.
    std::vector<double> distance;
    /// E_{p_t}[(f - esf)^2], for comparison.
    double distance_to_esf = 0.0;
};

/// Best delta on the grid for a 1-D score f; ties go to the smaller delta.
DeltaFit fit_delta(const std::function<double(double)>& f, double t, const TrainingSet& ts,
                   const std::vector<double>& delta_grid);

/// n points at equal angles on the circle of the given radius (columns, 2 x n).
Eigen::MatrixXd make_circle_set(std::size_t n, double radius = 1.0);

/// Uniform grid on [-1, 1] with each point shifted by U(-jitter, jitter).
TrainingSet make_nonuniform_set(std::size_t n, double jitter, std::uint64_t seed);

/// Writes `<stem>.json` (architecture, config, seed, groups) and `<stem>.bin`
/// (little-endian float64 parameters).
void save_checkpoint(const MlpScoreModel& model, const TrainConfig& cfg, const std::string& stem);
std::unique_ptr<MlpScoreModel> load_checkpoint(const std::string& stem);

}  // namespace scoresmooth
