#include "scoresmooth/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"

#include "scoresmooth/errors.hpp"
#include "scoresmooth/normal.hpp"
#include "scoresmooth/piecewise_linear.hpp"
#include "scoresmooth/quadrature.hpp"
#include "scoresmooth/regloss.hpp"
#include "scoresmooth/sampling.hpp"
#include "scoresmooth/score_field.hpp"
#include "scoresmooth/scorefield.hpp"

namespace scoresmooth {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Diagnostics

TerminalStats terminal_stats(const DenoiseRun& run, const TrainingSet& ts) {
    TerminalStats s;
    const auto m = run.terminal.cols();
    std::size_t near = 0, far = 0;
    for (Eigen::Index j = 0; j < m; ++j) {
        const double x = run.terminal(0, j);
        const double gap = std::abs(x - ts.point(ts.nearest_index(x)));
        near += gap <= 0.02;
        far += gap > 0.1;
    }
    s.near_anchor_fraction = static_cast<double>(near) / static_cast<double>(m);
    s.far_fraction = static_cast<double>(far) / static_cast<double>(m);
    if (run.dim() >= 2 && !run.moments.empty()) {
        const double t0 = run.times.front();
        const double sd0 = run.moments.front().sd(1);
        const std::size_t q = run.step_near(t0 / 4), e = run.step_near(t0 / 16);
        s.sd_ratio_quarter = run.moments[q].sd(1) / sd0;
        s.sd_ratio_sixteenth = run.moments[e].sd(1) / sd0;
        s.expected_ratio_quarter = std::sqrt(run.times[q] / t0);
        s.expected_ratio_sixteenth = std::sqrt(run.times[e] / t0);
    }
    return s;
}

CircleStats circle_stats(const Eigen::MatrixXd& terminal, const Eigen::MatrixXd& anchors) {
    const double radius = anchors.colwise().norm().mean();
    std::vector<double> angles;
    for (Eigen::Index k = 0; k < anchors.cols(); ++k) angles.push_back(std::atan2(anchors(1, k), anchors(0, k)));
    std::size_t in_band = 0, off = 0;
    for (Eigen::Index j = 0; j < terminal.cols(); ++j) {
        const double r = terminal.col(j).norm() / radius;
        in_band += r >= 0.8 && r <= 1.02;
        const double a = std::atan2(terminal(1, j), terminal(0, j));
        double best = INFINITY;
        for (double b : angles) best = std::min(best, std::abs(std::remainder(a - b, 2 * std::numbers::pi)));
        off += best > 0.1;
    }
    const auto m = static_cast<double>(terminal.cols());
    return {static_cast<double>(in_band) / m, static_cast<double>(off) / m};
}

std::vector<double> default_delta_grid(const TrainingSet& ts) {
    std::vector<double> grid;
    for (int i = 1; 0.005 * i < ts.half_spacing() - 1e-12; ++i) grid.push_back(0.005 * i);
    return grid;
}

namespace {

std::function<double(double)> scalar_model(const MlpScoreModel& m, double t) {
    return [&m, t](double x) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.dim()));
        v(0) = x;
        return m.evaluate(v, t)(0);
    };
}

TrainingSet axis_set(const ExperimentConfig& cfg) { return make_training_set(cfg).with_ambient_dim(1); }

}  // namespace

SweepSummary run_lambda_sweep(const ExperimentConfig& cfg) {
    const TrainingSet ts = axis_set(cfg);
    const auto grid = default_delta_grid(ts);
    SweepSummary out;
    std::vector<std::vector<double>> deltas(cfg.nn.seeds);
    for (std::size_t s = 0; s < cfg.nn.seeds; ++s) {
        for (double lambda : cfg.nn.lambdas) {
            const auto r = train_fixed_t(ts, cfg.nn.t, make_train_config(cfg, lambda, derive_seed(cfg.seed, s)));
            const auto fit = fit_delta(scalar_model(*r.model, cfg.nn.t), cfg.nn.t, ts, grid);
            const auto best = static_cast<std::size_t>(
                std::find(grid.begin(), grid.end(), fit.best_delta) - grid.begin());
            out.rows.push_back({s, lambda, fit.best_delta, fit.distance[best], fit.distance_to_esf, r.tail_loss});
            deltas[s].push_back(fit.best_delta);
        }
    }
    out.monotone = true;
    for (std::size_t i = 0; i + 1 < cfg.nn.lambdas.size(); ++i) {
        std::size_t votes = 0;
        for (std::size_t s = 0; s < cfg.nn.seeds; ++s) votes += deltas[s][i + 1] < deltas[s][i];
        out.decreasing_votes.push_back(votes);
        out.monotone = out.monotone && 2 * votes > cfg.nn.seeds;
    }
    out.closer_to_smoothed = std::all_of(out.rows.begin(), out.rows.end(),
                                         [](const SweepRow& r) { return r.distance_at_best < r.distance_to_esf; });
    return out;
}

namespace {

// ---------------------------------------------------------------------------
// Output files

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class RunOutput {
public:
    RunOutput(const ExperimentConfig& cfg, fs::path dir) : dir_(std::move(dir)), hash_(hash_hex(config_hash(cfg))), seed_(cfg.seed) {
        fs::create_directories(dir_);
        std::ofstream(dir_ / "config.json") << to_json(cfg).dump(2) << "\n";
        files_.push_back("config.json");
    }

    const fs::path& dir() const { return dir_; }
    fs::path path(const std::string& name) const { return dir_ / name; }

    void csv(const std::string& name, const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
        std::ofstream f(dir_ / name);
        f << "# scoresmooth-csv v1 config_hash=" << hash_ << " seed=" << seed_ << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) f << (i ? "," : "") << columns[i];
        f << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) f << (i ? "," : "") << fmt(row[i]);
            f << "\n";
        }
        add(name);
    }

    void write_json(const std::string& name, json j) {
        j["config_hash"] = hash_;
        j["seed"] = seed_;
        std::ofstream(dir_ / name) << j.dump(2) << "\n";
        add(name);
    }

    /// Records a file written by someone else (e.g. a checkpoint).
    void add(const std::string& name) {
        if (std::find(files_.begin(), files_.end(), name) == files_.end()) files_.push_back(name);
    }

    void manifest(const std::string& figure, const std::string& description) {
        add("manifest.json");
        json j{{"figure", figure}, {"description", description}, {"files", files_}, {"config_hash", hash_}, {"seed", seed_}};
        std::ofstream(dir_ / "manifest.json") << j.dump(2) << "\n";
    }

private:
    fs::path dir_;
    std::string hash_;
    std::uint64_t seed_;
    std::vector<std::string> files_;
};

std::string label_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

void write_loss_curve(RunOutput& out, const std::string& name, const std::vector<LossPoint>& curve, double lambda) {
    std::vector<std::vector<double>> rows;
    for (const auto& p : curve) rows.push_back({static_cast<double>(p.step), p.loss, lambda});
    out.csv(name, {"step", "loss", "lambda"}, rows);
}

void save_model(RunOutput& out, const MlpScoreModel& m, const TrainConfig& tc, const std::string& stem) {
    save_checkpoint(m, tc, out.path(stem).string());
    out.add(stem + ".json");
    out.add(stem + ".bin");
}

// ---------------------------------------------------------------------------
// Subcommands. Each returns true when its assertions (if any) hold.

bool run_score_eval(const ExperimentConfig& cfg, RunOutput& out) {
    const TrainingSet ts = axis_set(cfg);
    const double t = cfg.score_eval.t;
    std::vector<std::string> cols{"x", "esf", "pl_esf"};
    std::vector<double> deltas;
    for (double d : cfg.score_eval.deltas)
        if (d > 0.0 && d < ts.half_spacing()) deltas.push_back(d), cols.push_back("smoothed_delta=" + label_number(d));

    std::vector<std::unique_ptr<MlpScoreModel>> models;
    json fits = json::array();
    const auto grid = default_delta_grid(ts);
    if (cfg.nn.steps > 0) {
        for (double lambda : cfg.nn.lambdas) {
            auto r = train_fixed_t(ts, t, make_train_config(cfg, lambda, derive_seed(cfg.seed, 0)));
            const auto fit = fit_delta(scalar_model(*r.model, t), t, ts, grid);
            fits.push_back({{"lambda", lambda},
                            {"best_delta", fit.best_delta},
                            {"distance_to_esf", fit.distance_to_esf},
                            {"tail_loss", r.tail_loss}});
            cols.push_back("nn_lambda=" + label_number(lambda));
            models.push_back(std::move(r.model));
        }
    }
    std::vector<std::vector<double>> rows;
    const std::size_t m = cfg.score_eval.points;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = cfg.score_eval.x_lo + (cfg.score_eval.x_hi - cfg.score_eval.x_lo) * static_cast<double>(i) /
                                                   static_cast<double>(std::max<std::size_t>(m - 1, 1));
        std::vector<double> row{x, esf_1d(x, t, ts), pl_esf(x, t, ts)};
        for (double d : deltas) row.push_back(smoothed_pl_esf(x, t, d, ts));
        for (const auto& model : models) row.push_back(scalar_model(*model, t)(x));
        rows.push_back(std::move(row));
    }
    out.csv("curves.csv", cols, rows);
    out.write_json("fits.json", {{"t", t}, {"fits", fits}});
    out.manifest("nn-vs-smoothed-score-1d", "score curves at fixed t: empirical, piecewise-linear, smoothed and trained fields");
    return true;
}

bool run_sweep(const ExperimentConfig& cfg, RunOutput& out) {
    const auto summary = run_lambda_sweep(cfg);
    std::vector<std::vector<double>> rows;
    for (const auto& r : summary.rows)
        rows.push_back({static_cast<double>(r.seed), r.lambda, r.best_delta, r.distance_at_best, r.distance_to_esf, r.tail_loss});
    out.csv("sweep.csv", {"seed", "lambda", "best_delta", "distance_at_best", "distance_to_esf", "tail_loss"}, rows);
    out.write_json("summary.json", {{"lambdas", cfg.nn.lambdas},
                                    {"decreasing_votes", summary.decreasing_votes},
                                    {"seeds", cfg.nn.seeds},
                                    {"monotone", summary.monotone},
                                    {"closer_to_smoothed", summary.closer_to_smoothed}});
    out.manifest("fitted-delta-vs-weight-decay", "fitted smoothing width of trained fixed-t models per weight decay and seed");
    return summary.monotone && summary.closer_to_smoothed;
}

bool run_train_1d(const ExperimentConfig& cfg, RunOutput& out) {
    const TrainingSet ts = axis_set(cfg);
    const double t = cfg.nn.t;
    const TrainConfig tc = make_train_config(cfg, cfg.nn.weight_decay, derive_seed(cfg.seed, 0));
    const auto r = train_fixed_t(ts, t, tc);
    const auto f = scalar_model(*r.model, t);
    const auto fit = fit_delta(f, t, ts, default_delta_grid(ts));
    save_model(out, *r.model, tc, "model");
    write_loss_curve(out, "loss.csv", r.curve, tc.optimizer.weight_decay);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < cfg.score_eval.points; ++i) {
        const double x = cfg.score_eval.x_lo +
                         (cfg.score_eval.x_hi - cfg.score_eval.x_lo) * static_cast<double>(i) /
                             static_cast<double>(std::max<std::size_t>(cfg.score_eval.points - 1, 1));
        rows.push_back({x, f(x), esf_1d(x, t, ts), smoothed_pl_esf(x, t, fit.best_delta, ts)});
    }
    out.csv("curve.csv", {"x", "nn", "esf", "smoothed_at_fit"}, rows);
    out.write_json("fit.json", {{"lambda", cfg.nn.weight_decay},
                                {"t", t},
                                {"best_delta", fit.best_delta},
                                {"distance_to_esf", fit.distance_to_esf},
                                {"head_loss", r.head_loss},
                                {"tail_loss", r.tail_loss}});
    out.manifest("nn-vs-smoothed-score-1d", "one fixed-t model with its fitted smoothed score");
    return true;
}

bool run_nonuniform(const ExperimentConfig& cfg, RunOutput& out) {
    const TrainingSet ts = axis_set(cfg);
    const double t = cfg.nn.t;
    std::vector<std::string> cols{"x", "esf"};
    std::vector<std::unique_ptr<MlpScoreModel>> models;
    json losses = json::array();
    for (double lambda : cfg.nn.lambdas) {
        auto r = train_fixed_t(ts, t, make_train_config(cfg, lambda, derive_seed(cfg.seed, 0)));
        cols.push_back("nn_lambda=" + label_number(lambda));
        losses.push_back({{"lambda", lambda}, {"tail_loss", r.tail_loss}});
        models.push_back(std::move(r.model));
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < cfg.score_eval.points; ++i) {
        const double x = cfg.score_eval.x_lo +
                         (cfg.score_eval.x_hi - cfg.score_eval.x_lo) * static_cast<double>(i) /
                             static_cast<double>(std::max<std::size_t>(cfg.score_eval.points - 1, 1));
        std::vector<double> row{x, esf_1d(x, t, ts)};
        for (const auto& m : models) row.push_back(scalar_model(*m, t)(x));
        rows.push_back(std::move(row));
    }
    out.csv("curves.csv", cols, rows);
    out.write_json("anchors.json", {{"points", std::vector<double>(ts.points().begin(), ts.points().end())},
                                    {"t", t},
                                    {"training", losses}});
    out.manifest("nonuniform-nn-score", "trained fixed-t scores for jittered anchors under several weight decays");
    return true;
}

bool run_train_2d(const ExperimentConfig& cfg, RunOutput& out) {
    const TrainingSet ts = make_training_set(cfg);
    if (ts.ambient_dim() < 2) throw ConfigError("config field 'training_set.dim': train-2d needs dim >= 2");
    const TrainConfig tc = make_train_config(cfg, cfg.nn.weight_decay, derive_seed(cfg.seed, 0));
    const auto r = train_time_conditioned(ts, tc);
    save_model(out, *r.model, tc, "model");
    write_loss_curve(out, "loss.csv", r.curve, tc.optimizer.weight_decay);

    const SmoothingParams sp{cfg.kappa};
    const double t0 = cfg.schedule.t0;
    std::vector<std::vector<double>> tangent, normal;
    for (double t : {t0, t0 / 4, t0 / 16}) {
        const bool smooth_ok = sp.delta_of(t) < ts.half_spacing();
        for (int i = 0; i <= 320; ++i) {
            const double u = -1.6 + 0.01 * i;
            Eigen::VectorXd a = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ts.ambient_dim()));
            a(0) = u;
            const double sm = smooth_ok ? smoothed_multi(a, t, sp, ts)(0) : NAN;
            tangent.push_back({t, u, esf_multi(a, t, ts)(0), sm, r.model->evaluate(a, t)(0)});
            Eigen::VectorXd b = Eigen::VectorXd::Zero(a.size());
            b(0) = ts.point(1);
            b(1) = u;
            const double smn = smooth_ok ? smoothed_multi(b, t, sp, ts)(1) : NAN;
            normal.push_back({t, u, esf_multi(b, t, ts)(1), smn, r.model->evaluate(b, t)(1)});
        }
    }
    out.csv("tangent_slices.csv", {"t", "x1", "esf", "smoothed", "nn"}, tangent);
    out.csv("normal_slices.csv", {"t", "x2", "esf", "smoothed", "nn"}, normal);
    out.write_json("training.json", {{"head_loss", r.head_loss}, {"tail_loss", r.tail_loss}, {"params", r.model->param_count()}});
    out.manifest("time-conditioned-score-slices", "tangent and normal score slices of the three fields at several t");
    return true;
}

json histogram_json(const Histogram& h) {
    return {{"lo", h.lo()}, {"hi", h.hi()}, {"counts", h.counts()}, {"underflow", h.underflow()}, {"overflow", h.overflow()}};
}

bool run_denoise_compare(const ExperimentConfig& cfg, RunOutput& out) {
    const TrainingSet ts = make_training_set(cfg);
    const SmoothingParams sp{cfg.kappa};
    const NoiseSchedule& sched = cfg.schedule;
    sp.check_valid(sched.t0, ts);
    const double t0 = sched.t0;
    const Eigen::MatrixXd x0 = sample_noised_empirical(t0, ts, cfg.denoise.samples, derive_seed(cfg.seed, 10));

    BackwardOptions opt;
    opt.snapshot_times = {t0, t0 / 4, t0 / 16, sched.t_min};
    opt.hist_lo = cfg.denoise.hist_lo;
    opt.hist_hi = cfg.denoise.hist_hi;
    opt.hist_bins = cfg.denoise.hist_bins;

    struct Entry {
        std::string name;
        std::shared_ptr<const ScoreField> field;
    };
    std::vector<Entry> fields{{"esf", std::make_shared<EmpiricalScoreField>(ts, cfg.denoise.clip_factor)},
                              {"smoothed", std::make_shared<SmoothedScoreField>(ts, sp)}};
    json training = nullptr;
    if (cfg.nn.steps > 0) {
        const TrainConfig tc = make_train_config(cfg, cfg.nn.weight_decay, derive_seed(cfg.seed, 0));
        auto r = train_time_conditioned(ts, tc);
        save_model(out, *r.model, tc, "model");
        write_loss_curve(out, "loss.csv", r.curve, tc.optimizer.weight_decay);
        training = {{"head_loss", r.head_loss}, {"tail_loss", r.tail_loss}};
        fields.push_back({"nn", std::make_shared<NeuralScoreField>(std::shared_ptr<const MlpScoreModel>(std::move(r.model)))});
    }

    json hist = json::object(), summary = json::object();
    for (std::size_t f = 0; f < fields.size(); ++f) {
        const auto run = integrate_backward(*fields[f].field, sched, x0, derive_seed(cfg.seed, 20 + f), opt);
        std::vector<std::string> cols{"sample_id", "t"};
        for (std::size_t i = 0; i < run.dim(); ++i) cols.push_back("x" + std::to_string(i + 1));
        std::vector<std::vector<double>> rows;
        json snaps = json::array();
        for (const auto& s : run.snapshots) {
            const auto keep = std::min<Eigen::Index>(s.states.cols(), static_cast<Eigen::Index>(cfg.denoise.trajectory_samples));
            for (Eigen::Index j = 0; j < keep; ++j) {
                std::vector<double> row{static_cast<double>(j), s.t};
                for (Eigen::Index i = 0; i < s.states.rows(); ++i) row.push_back(s.states(i, j));
                rows.push_back(std::move(row));
            }
            json coords = json::array();
            for (const auto& h : run.histograms[s.step]) coords.push_back(histogram_json(h));
            snaps.push_back({{"step", s.step}, {"t", s.t}, {"coordinates", coords}});
        }
        out.csv("trajectories_" + fields[f].name + ".csv", cols, rows);
        json moments = json::array();
        for (std::size_t i = 0; i < run.times.size(); ++i) {
            const auto& m = run.moments[i];
            moments.push_back({{"t", run.times[i]},
                               {"mean", std::vector<double>(m.mean.data(), m.mean.data() + m.mean.size())},
                               {"sd", std::vector<double>(m.sd.data(), m.sd.data() + m.sd.size())}});
        }
        hist[fields[f].name] = {{"descriptor", fields[f].field->descriptor()}, {"snapshots", snaps}, {"moments", moments}};
        const auto st = terminal_stats(run, ts);
        summary[fields[f].name] = {{"near_anchor_fraction", st.near_anchor_fraction},
                                   {"far_fraction", st.far_fraction},
                                   {"sd_ratio_quarter", st.sd_ratio_quarter},
                                   {"expected_ratio_quarter", st.expected_ratio_quarter},
                                   {"sd_ratio_sixteenth", st.sd_ratio_sixteenth},
                                   {"expected_ratio_sixteenth", st.expected_ratio_sixteenth}};
    }

    // analytic tangent laws of the smoothed dynamics, as bin averages on the histogram grid
    const auto law = noised_empirical_law(t0, ts);
    const Histogram grid(cfg.denoise.hist_lo, cfg.denoise.hist_hi, cfg.denoise.hist_bins);
    json analytic = json::array();
    for (double s : opt.snapshot_times) {
        const auto p = pushforward_density(s, t0, law.pdf, sp, ts);
        std::vector<double> edges;
        for (double y : ts.points()) edges.push_back(y - sp.delta_of(s)), edges.push_back(y + sp.delta_of(s));
        std::vector<double> dens;
        for (std::size_t b = 0; b < grid.bins(); ++b)
            dens.push_back(integrate_piecewise(p, grid.left_edge(b), grid.left_edge(b) + grid.width(), edges, 1e-10) / grid.width());
        analytic.push_back({{"t", s}, {"bin_density", dens}});
    }
    const auto dec = terminal_decomposition(t0, law, sp, ts);
    std::vector<double> smooth;
    for (std::size_t b = 0; b < grid.bins(); ++b) smooth.push_back(dec.continuous_part(grid.center(b)));
    hist["analytic"] = {{"pushforward", analytic},
                        {"terminal", {{"anchors", dec.anchors},
                                      {"atom_weights", dec.atom_weights},
                                      {"smooth_mass", dec.smooth_mass},
                                      {"continuous_part_at_centers", smooth}}}};
    out.write_json("histograms.json", hist);
    out.write_json("summary.json", {{"fields", summary}, {"training", training}});
    out.manifest("denoising-three-score-fields",
                 "samples, tangent histograms and analytic overlays for denoising under the empirical, smoothed and trained fields");
    return true;
}

bool run_circle(const ExperimentConfig& cfg, RunOutput& out) {
    const Eigen::MatrixXd anchors = make_anchor_matrix(cfg);
    const double t0 = cfg.schedule.t0;
    const TrainConfig tc = make_train_config(cfg, cfg.nn.weight_decay, derive_seed(cfg.seed, 0));
    auto r = train_time_conditioned(anchors, tc);
    save_model(out, *r.model, tc, "model");
    write_loss_curve(out, "loss.csv", r.curve, tc.optimizer.weight_decay);

    Rng rng(derive_seed(cfg.seed, 10));
    const Eigen::MatrixXd x0 = sample_noised_points(t0, anchors, cfg.denoise.samples, rng);
    PointCloudScoreField esf(anchors, cfg.denoise.clip_factor);
    NeuralScoreField nn(std::shared_ptr<const MlpScoreModel>(std::move(r.model)));
    BackwardOptions opt;
    opt.hist_lo = -1.5;
    opt.hist_hi = 1.5;

    auto dump = [&](const std::string& name, const Eigen::MatrixXd& x) {
        std::vector<std::vector<double>> rows;
        const auto keep = std::min<Eigen::Index>(x.cols(), static_cast<Eigen::Index>(cfg.denoise.trajectory_samples));
        for (Eigen::Index j = 0; j < keep; ++j) rows.push_back({static_cast<double>(j), x(0, j), x(1, j)});
        out.csv(name, {"sample_id", "x1", "x2"}, rows);
    };
    dump("start.csv", x0);
    json stats = json::object();
    const std::pair<const char*, const ScoreField*> runs[] = {{"esf", &esf}, {"nn", &nn}};
    std::size_t i = 0;
    for (const auto& [name, field] : runs) {
        const auto run = integrate_backward(*field, cfg.schedule, x0, derive_seed(cfg.seed, 20 + i++), opt);
        dump(std::string("terminal_") + name + ".csv", run.terminal);
        const auto cs = circle_stats(run.terminal, anchors);
        stats[name] = {{"radius_band_fraction", cs.radius_band_fraction}, {"off_anchor_angle_fraction", cs.off_anchor_angle_fraction}};
    }
    out.write_json("stats.json", {{"fields", stats}, {"tail_loss", r.tail_loss}});
    out.manifest("circle-denoising", "start and terminal samples for anchors on a circle under the empirical and trained fields");
    return true;
}

// ---------------------------------------------------------------------------
// verify

struct Check {
    std::string name;
    bool passed = false;
    json detail;
};

Check check_f_function() {
    Check c{"f-function", true, json::object()};
    const double f0 = F_kappa(0.0);
    c.passed &= std::abs(f0 - 1.0) <= 1e-10;
    bool decreasing = true;
    for (int i = 1; i <= 50; ++i) decreasing &= F_kappa(0.1 * i) < F_kappa(0.1 * (i - 1));
    double worst_inverse = 0.0;
    for (int i = 0; i <= 78; ++i) {
        const double k = 0.1 + 0.05 * i;
        worst_inverse = std::max(worst_inverse, std::abs(F_inverse(F_kappa(k)) - k));
    }
    json table = json::array();
    double worst_integral = 0.0;
    for (double k : {0.5, 1.0, 2.0}) {
        const double num = adaptive_simpson(
            [k](double u) { return 2.0 * (u - k) * (u - k) * normal_pdf(u); }, k, k + 40.0, 1e-14);
        worst_integral = std::max(worst_integral, std::abs(num - F_kappa(k)));
        table.push_back({{"kappa", k}, {"closed_form", F_kappa(k)}, {"integral", num}});
    }
    c.passed &= decreasing && worst_inverse <= 1e-8 && worst_integral <= 1e-8;
    c.detail = {{"F0", f0}, {"decreasing", decreasing}, {"max_inverse_error", worst_inverse},
                {"max_integral_error", worst_integral}, {"table", table}};
    return c;
}

Check check_loss_convergence() {
    Check c{"loss-convergence", true, json::array()};
    const std::vector<double> grid{1e-3, 1e-4, 1e-5};
    for (std::size_t n : {2u, 4u}) {
        const auto rows = lemma1_convergence_check(1.0, TrainingSet::uniform(n), grid);
        bool ok = rows.back().residual < rows.front().residual;
        for (const auto& r : rows) {
            ok &= r.residual <= 5.0 * std::sqrt(r.t);
            c.detail.push_back({{"n", n}, {"t", r.t}, {"loss", r.loss}, {"limit", r.limit}, {"residual", r.residual}});
        }
        c.passed &= ok;
    }
    return c;
}

Check check_optimality() {
    Check c{"optimality-certificate", true, json::array()};
    const double eps = 0.01, kappa = F_inverse(eps) + 0.05, t = 1e-5;
    for (std::size_t n : {2u, 4u}) {
        const auto ts = TrainingSet::uniform(n);
        const auto r = optimality_report(eps, kappa, t, ts);
        const double r_pl = nonsmoothness_R(smoothed_as_pl(t, r.delta, ts));
        const double rel = std::abs(r_pl - r.r_closed_form) / r.r_closed_form;
        c.passed &= r.loss_value < eps && r.ratio < 1.0 + 8.0 * std::sqrt(eps) && rel <= 1e-9;
        c.detail.push_back({{"n", n}, {"kappa", kappa}, {"loss", r.loss_value}, {"ratio", r.ratio},
                            {"r_candidate", r_pl}, {"r_closed_form", r.r_closed_form}, {"r_lower_bound", r.r_lower_bound}});
    }
    return c;
}

Check check_flow_oracle(std::uint64_t seed) {
    const auto ts = TrainingSet::uniform(4, 1.0, 2);
    const SmoothingParams sp{1.2};
    NoiseSchedule sched;
    const double t0 = sched.t0;
    // 1000 starts away from the region boundaries at t0
    const Eigen::MatrixXd pool = sample_noised_empirical(t0, ts, 4000, derive_seed(seed, 30));
    Eigen::MatrixXd x0(2, 1000);
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < pool.cols() && kept < x0.cols(); ++j) {
        bool near_edge = false;
        for (double y : ts.points())
            near_edge |= std::abs(std::abs(pool(0, j) - y) - sp.delta_of(t0)) < 1e-3;
        if (!near_edge) x0.col(kept++) = pool.col(j);
    }
    SmoothedScoreField field(ts, sp);
    auto max_error = [&](std::size_t steps) {
        sched.steps = steps;
        const auto run = integrate_backward(field, sched, x0, 0);
        double worst = 0.0;
        for (Eigen::Index j = 0; j < x0.cols(); ++j)
            worst = std::max(worst, (run.terminal.col(j) - flow_map_multi(x0.col(j), sched.t_min, t0, sp, ts)).cwiseAbs().maxCoeff());
        return worst;
    };
    const double e500 = max_error(500), e2000 = max_error(2000);
    return {"flow-map-oracle", e2000 <= 1e-3 && e2000 <= 0.5 * e500, {{"error_500", e500}, {"error_2000", e2000}}};
}

Check check_kl() {
    const auto ts = TrainingSet::uniform(2);
    const SmoothingParams sp{1.0};
    const double t0 = 0.02;
    const auto law = noised_empirical_law(t0, ts);
    const auto dec = terminal_decomposition(t0, law, sp, ts);
    const double lhs = kl_uniform([&](double x) { return dec.continuous_part(x); }, 1.0, dec.breaks);
    const double rhs = kl_uniform(law.pdf, 1.0 - sp.delta_of(t0));
    const double bound = kl_terminal_bound(t0, 1.0);
    return {"kl-diagnostics", std::abs(lhs - rhs) <= 1e-3 && lhs < bound,
            {{"kl_terminal", lhs}, {"kl_source", rhs}, {"bound", bound}}};
}

bool run_verify(const ExperimentConfig& cfg, RunOutput& out) {
    std::vector<Check> checks{check_f_function(), check_loss_convergence(), check_optimality(), check_flow_oracle(cfg.seed),
                              check_kl()};
    bool all = true;
    json list = json::array();
    std::ofstream txt(out.path("report.txt"));
    for (const auto& c : checks) {
        all &= c.passed;
        list.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
        txt << (c.passed ? "PASS " : "FAIL ") << c.name << " " << c.detail.dump() << "\n";
    }
    out.add("report.txt");
    out.write_json("report.json", {{"passed", all}, {"checks", list}});
    out.manifest("proposition-checks", "loss limit table, optimality certificates, flow-map oracle, KL identity and bound, F table");
    return all;
}

bool dispatch(const ExperimentConfig& cfg, RunOutput& out) {
    switch (cfg.kind) {
    case ExperimentKind::ScoreEval: return run_score_eval(cfg, out);
    case ExperimentKind::DenoiseCompare: return run_denoise_compare(cfg, out);
    case ExperimentKind::Verify: return run_verify(cfg, out);
    case ExperimentKind::Train1d: return run_train_1d(cfg, out);
    case ExperimentKind::Train2d: return run_train_2d(cfg, out);
    case ExperimentKind::Circle: return run_circle(cfg, out);
    case ExperimentKind::Nonuniform: return run_nonuniform(cfg, out);
    case ExperimentKind::Sweep: return run_sweep(cfg, out);
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLI

int cli_main(int argc, char** argv) {
    CLI::App app{"Score smoothing experiments"};
    app.require_subcommand(1);

    struct Sub {
        ExperimentKind kind;
        CLI::App* app;
        std::string config = "default";
        std::string out;
        std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> overrides;
    };
    std::vector<std::unique_ptr<Sub>> subs;

    // Option storage lives as long as the parser; overrides copy it into the config.
    struct Values {
        std::uint64_t seed = 0;
        double t = 0, t0 = 0, kappa = 0, lambda = 0, lr = 0;
        std::size_t n = 0, d = 0, samples = 0, steps = 0, hidden = 0, seeds = 0;
        std::vector<double> lambdas;
    };
    auto v = std::make_shared<Values>();

    auto add_sub = [&](ExperimentKind kind, const std::string& help) {
        auto s = std::make_unique<Sub>();
        s->kind = kind;
        s->app = app.add_subcommand(kind == ExperimentKind::Verify ? "verify" : to_string(kind), help);
        s->app->add_option("--config", s->config, "JSON config file, or 'default'");
        s->app->add_option("--out", s->out, "output directory");
        s->overrides.push_back({s->app->add_option("--seed", v->seed, "top-level seed"), [v](ExperimentConfig& c) { c.seed = v->seed; }});
        subs.push_back(std::move(s));
        return subs.back().get();
    };
    auto opt = [&](Sub* s, const std::string& flag, auto& target, const std::string& help, std::function<void(ExperimentConfig&)> apply) {
        s->overrides.push_back({s->app->add_option(flag, target, help), std::move(apply)});
    };

    Sub* se = add_sub(ExperimentKind::ScoreEval, "score curves of every field variant on a grid");
    opt(se, "--t", v->t, "time", [v](ExperimentConfig& c) { c.score_eval.t = c.nn.t = v->t; });
    se->overrides.push_back({se->app->add_option("--lambdas", v->lambdas, "weight decays")->delimiter(','),
                             [v](ExperimentConfig& c) { c.nn.lambdas = v->lambdas; }});
    opt(se, "--steps", v->steps, "training steps (0 skips the trained curves)", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });
    opt(se, "--hidden", v->hidden, "hidden width", [v](ExperimentConfig& c) { c.nn.hidden = v->hidden; });

    Sub* dc = add_sub(ExperimentKind::DenoiseCompare, "denoising under the empirical, smoothed and trained fields");
    opt(dc, "--n", v->n, "anchors", [v](ExperimentConfig& c) { c.training_set.n = v->n; });
    opt(dc, "--d", v->d, "ambient dimension", [v](ExperimentConfig& c) { c.training_set.dim = v->d; });
    opt(dc, "--t0", v->t0, "start time", [v](ExperimentConfig& c) { c.schedule.t0 = v->t0; });
    opt(dc, "--kappa", v->kappa, "smoothing constant", [v](ExperimentConfig& c) { c.kappa = v->kappa; });
    opt(dc, "--samples", v->samples, "samples", [v](ExperimentConfig& c) { c.denoise.samples = v->samples; });
    opt(dc, "--nn-steps", v->steps, "training steps (0 skips the trained field)", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });

    add_sub(ExperimentKind::Verify, "run every analytic check");

    Sub* t1 = add_sub(ExperimentKind::Train1d, "train one fixed-t model");
    opt(t1, "--lambda", v->lambda, "weight decay", [v](ExperimentConfig& c) { c.nn.weight_decay = v->lambda; });
    opt(t1, "--t", v->t, "training time", [v](ExperimentConfig& c) { c.nn.t = v->t; });
    opt(t1, "--steps", v->steps, "training steps", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });
    opt(t1, "--hidden", v->hidden, "hidden width", [v](ExperimentConfig& c) { c.nn.hidden = v->hidden; });

    Sub* t2 = add_sub(ExperimentKind::Train2d, "train the time-conditioned model");
    opt(t2, "--steps", v->steps, "training steps", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });
    opt(t2, "--hidden", v->hidden, "hidden width", [v](ExperimentConfig& c) { c.nn.hidden = v->hidden; });
    opt(t2, "--lr", v->lr, "learning rate", [v](ExperimentConfig& c) { c.nn.lr = v->lr; });

    Sub* ci = add_sub(ExperimentKind::Circle, "anchors on a circle, trained without weight decay");
    opt(ci, "--n", v->n, "anchors", [v](ExperimentConfig& c) { c.training_set.n = v->n; });
    opt(ci, "--steps", v->steps, "training steps", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });
    opt(ci, "--samples", v->samples, "samples", [v](ExperimentConfig& c) { c.denoise.samples = v->samples; });

    Sub* nu = add_sub(ExperimentKind::Nonuniform, "fixed-t models on jittered anchors");
    nu->overrides.push_back({nu->app->add_option("--lambdas", v->lambdas, "weight decays")->delimiter(','),
                             [v](ExperimentConfig& c) { c.nn.lambdas = v->lambdas; }});
    opt(nu, "--steps", v->steps, "training steps", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });

    Sub* sw = add_sub(ExperimentKind::Sweep, "weight decay grid to fitted delta table");
    sw->overrides.push_back({sw->app->add_option("--lambdas", v->lambdas, "weight decays")->delimiter(','),
                             [v](ExperimentConfig& c) { c.nn.lambdas = v->lambdas; }});
    opt(sw, "--seeds", v->seeds, "seeds per weight decay", [v](ExperimentConfig& c) { c.nn.seeds = v->seeds; });
    opt(sw, "--steps", v->steps, "training steps", [v](ExperimentConfig& c) { c.nn.steps = v->steps; });
    opt(sw, "--hidden", v->hidden, "hidden width", [v](ExperimentConfig& c) { c.nn.hidden = v->hidden; });
    opt(sw, "--t", v->t, "training time", [v](ExperimentConfig& c) { c.nn.t = v->t; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        for (const auto& s : subs) {
            if (!s->app->parsed()) continue;
            ExperimentConfig cfg = s->config == "default" ? default_config(s->kind) : load_config(s->config);
            if (cfg.kind != s->kind)
                throw ConfigError("config field 'kind': '" + to_string(cfg.kind) + "' does not match subcommand " + s->app->get_name());
            for (const auto& [option, apply] : s->overrides)
                if (option->count() > 0) apply(cfg);
            if (!s->out.empty()) cfg.output_dir = s->out;
            RunOutput out(cfg, resolve_output_dir(cfg));
            const bool ok = dispatch(cfg, out);
            std::cout << (ok ? "ok: " : "FAILED: ") << to_string(cfg.kind) << " -> " << out.dir().string() << "\n";
            if (!ok) {
                std::cerr << "assertions failed; see " << (out.dir() / "manifest.json").string() << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace scoresmooth
