#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include "json.hpp"

#include "scoresmooth/denoise.hpp"
#include "scoresmooth/nnscore.hpp"
#include "scoresmooth/training_set.hpp"

namespace scoresmooth {

/// Malformed or incomplete experiment configuration. The message names the field.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { ScoreEval, DenoiseCompare, Verify, Train1d, Train2d, Circle, Nonuniform, Sweep };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& s);

struct TrainingSetSpec {
    /// "uniform", "points", "nonuniform" or "circle".
    std::string layout = "uniform";
    std::size_t n = 4;
    double half_width = 1.0;
    std::size_t dim = 1;
    /// Explicit anchors for the "points" layout.
    std::vector<double> points;
    /// Per-point shift bound for the "nonuniform" layout.
    double jitter = 0.1;
    double radius = 1.0;
};

struct DenoiseSpec {
    std::size_t samples = 200000;
    /// ESF-driven runs clip the score to norm clip_factor / t.
    double clip_factor = 10.0;
    /// Samples written to the per-snapshot trajectory CSVs.
    std::size_t trajectory_samples = 2000;
    double hist_lo = -1.05;
    double hist_hi = 1.05;
    std::size_t hist_bins = 50;
};

struct NnSpec {
    std::size_t hidden = 256;
    std::size_t embed = 16;
    double lr = 2e-4;
    std::size_t batch = 1024;
    std::size_t steps = 6000;
    double weight_decay = 0.0;
    /// Training time of fixed-time models.
    double t = 0.05;
    /// Lower end of the time range of time-conditioned models (the upper end is the schedule's t0).
    double t_lo = 1e-6;
    std::vector<double> lambdas{1.0, 3.0, 5.0, 7.0};
    std::size_t seeds = 3;
};

struct ScoreEvalSpec {
    double t = 0.05;
    double x_lo = -1.6;
    double x_hi = 1.6;
    std::size_t points = 641;
    std::vector<double> deltas{0.648, 0.548, 0.453, 0.346};
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::Verify;
    std::uint64_t seed = 0;
    /// Empty means <output root>/<kind>-<hash>.
    std::string output_dir;
    TrainingSetSpec training_set;
    double kappa = 1.2;
    NoiseSchedule schedule;
    DenoiseSpec denoise;
    NnSpec nn;
    ScoreEvalSpec score_eval;
};

/// Defaults for each experiment kind, at desk scale.
ExperimentConfig default_config(ExperimentKind kind);

nlohmann::json to_json(const ExperimentConfig& cfg);
/// `kind`, `seed` and `training_set.layout` are required; everything else
/// falls back to default_config(kind). Throws ConfigError naming the field.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Parses a JSON file; syntax errors report line and column.
ExperimentConfig load_config(const std::filesystem::path& path);

/// FNV-1a (64 bit) of the compact JSON form of the config.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hash_hex(std::uint64_t h);

/// Builds the anchors a config describes (uniform, explicit or jittered).
TrainingSet make_training_set(const ExperimentConfig& cfg);
/// Anchors as columns; for the circle layout these are off-axis.
Eigen::MatrixXd make_anchor_matrix(const ExperimentConfig& cfg);

/// Training configuration for the config's NN spec with the given decay and
/// seed. Time-conditioned runs sample t on [nn.t_lo, schedule.t0].
TrainConfig make_train_config(const ExperimentConfig& cfg, double weight_decay, std::uint64_t seed);

/// Output directory after applying the SCORESMOOTH_OUTPUT_ROOT environment variable.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Diagnostics shared by the CLI and the acceptance checks.

struct TerminalStats {
    /// Fraction of tangent coordinates within 0.02 of some anchor.
    double near_anchor_fraction = 0.0;
    /// Fraction farther than 0.1 from every anchor.
    double far_fraction = 0.0;
    /// Normal-coordinate sd at the grid times nearest t0/4 and t0/16, over the sd at t0.
    double sd_ratio_quarter = 0.0;
    double sd_ratio_sixteenth = 0.0;
    /// The matching sqrt(t/t0) at those grid times.
    double expected_ratio_quarter = 0.0;
    double expected_ratio_sixteenth = 0.0;
};

TerminalStats terminal_stats(const DenoiseRun& run, const TrainingSet& ts);

struct CircleStats {
    /// Fraction of terminal samples with radius in [0.8, 1.02] (relative to the set radius).
    double radius_band_fraction = 0.0;
    /// Fraction farther than 0.1 rad in angle from every anchor.
    double off_anchor_angle_fraction = 0.0;
};

CircleStats circle_stats(const Eigen::MatrixXd& terminal, const Eigen::MatrixXd& anchors);

struct SweepRow {
    std::uint64_t seed = 0;
    double lambda = 0.0;
    double best_delta = 0.0;
    double distance_at_best = 0.0;
    double distance_to_esf = 0.0;
    double tail_loss = 0.0;
};

struct SweepSummary {
    std::vector<SweepRow> rows;
    /// For each adjacent lambda pair, the number of seeds where delta decreased.
    std::vector<std::size_t> decreasing_votes;
    bool monotone = false;
    bool closer_to_smoothed = false;
};

/// The delta grid used to fit trained fixed-time models: 0.005 steps below Delta.
std::vector<double> default_delta_grid(const TrainingSet& ts);

/// Trains one fixed-time model per (seed, lambda) and fits delta to each.
SweepSummary run_lambda_sweep(const ExperimentConfig& cfg);

/// Entry point of the command-line tool. Exit codes: 0 success, 1 a check
/// failed, 2 usage or configuration error.
int cli_main(int argc, char** argv);

}  // namespace scoresmooth
