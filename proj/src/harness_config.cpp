#include "scoresmooth/harness.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "scoresmooth/sampling.hpp"

namespace scoresmooth {

namespace {

using nlohmann::json;

struct KindName {
    ExperimentKind kind;
    const char* name;
};

constexpr KindName kKindNames[] = {
    {ExperimentKind::ScoreEval, "score-eval"}, {ExperimentKind::DenoiseCompare, "denoise-compare"},
    {ExperimentKind::Verify, "verify-propositions"},{ExperimentKind::Train1d, "train-1d"},
    {ExperimentKind::Train2d, "train-2d"},     {ExperimentKind::Circle, "circle"},
    {ExperimentKind::Nonuniform, "nonuniform"}, {ExperimentKind::Sweep, "sweep"},
};

// Typed field access that reports the dotted path of whatever is wrong.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + "expected an object");
    }

    bool has(const char* key) const { return j_.contains(key); }

    Reader child(const char* key) const {
        static const json empty = json::object();
        return Reader(j_.contains(key) ? j_.at(key) : empty, path_ + key + ".");
    }

    void require(const char* key) const {
        if (!j_.contains(key)) throw ConfigError(where(key) + "missing required field");
    }

    void number(const char* key, double& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
        out = v.get<double>();
    }

    void positive(const char* key, double& out) const {
        number(key, out);
        if (j_.contains(key) && !(out > 0.0)) throw ConfigError(where(key) + "must be positive");
    }

    template <class Int>
    void count(const char* key, Int& out, bool allow_zero = false) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<long long>() < (allow_zero ? 0 : 1))
            throw ConfigError(where(key) + (allow_zero ? "expected a non-negative integer" : "expected a positive integer"));
        out = static_cast<Int>(v.get<unsigned long long>());
    }

    void text(const char* key, std::string& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
        out = v.get<std::string>();
    }

    void numbers(const char* key, std::vector<double>& out) const {
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(where(key) + "expected an array of numbers");
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number()) throw ConfigError(where(key) + "expected an array of numbers");
            out.push_back(e.get<double>());
        }
    }

    std::string where(const std::string& key) const { return "config field '" + path_ + key + "': "; }

private:
    const json& j_;
    std::string path_;
};

}  // namespace

std::string to_string(ExperimentKind k) {
    for (const auto& e : kKindNames)
        if (e.kind == k) return e.name;
    return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& s) {
    for (const auto& e : kKindNames)
        if (s == e.name) return e.kind;
    throw ConfigError("unknown experiment kind '" + s + "'");
}

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    switch (kind) {
    case ExperimentKind::Verify:
        c.training_set.n = 2;
        c.kappa = 1.0;
        break;
    case ExperimentKind::ScoreEval:
    case ExperimentKind::Sweep:
    case ExperimentKind::Train1d:
        c.training_set.n = 2;
        c.nn.hidden = 1024;
        c.nn.weight_decay = 1.0;
        c.nn.seeds = kind == ExperimentKind::Sweep ? 3 : 1;
        break;
    case ExperimentKind::Nonuniform:
        c.training_set.layout = "nonuniform";
        c.training_set.n = 6;
        c.training_set.jitter = 0.1;
        c.nn.hidden = 1024;
        c.nn.t = 0.1;
        c.nn.steps = 15000;
        c.nn.lr = 5e-5;
        c.nn.seeds = 1;
        c.score_eval.t = 0.1;
        c.score_eval.deltas.clear();
        break;
    case ExperimentKind::DenoiseCompare:
    case ExperimentKind::Train2d:
        c.training_set.n = 4;
        c.training_set.dim = 2;
        c.kappa = 1.2;
        c.nn.hidden = 128;
        c.nn.lr = 1e-4;
        c.nn.steps = 20000;
        c.nn.batch = 1024;
        c.nn.weight_decay = 3.0;
        break;
    case ExperimentKind::Circle:
        c.training_set.layout = "circle";
        c.training_set.n = 8;
        c.training_set.dim = 2;
        c.schedule.t0 = 0.08;
        c.denoise.samples = 20000;
        c.nn.hidden = 128;
        c.nn.lr = 1e-4;
        c.nn.steps = 20000;
        c.nn.batch = 64;
        c.nn.weight_decay = 0.0;
        break;
    }
    return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
    json j;
    j["kind"] = to_string(c.kind);
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    j["training_set"] = {{"layout", c.training_set.layout},       {"n", c.training_set.n},
                         {"half_width", c.training_set.half_width}, {"dim", c.training_set.dim},
                         {"points", c.training_set.points},         {"jitter", c.training_set.jitter},
                         {"radius", c.training_set.radius}};
    j["smoothing"] = {{"kappa", c.kappa}};
    j["schedule"] = {{"t0", c.schedule.t0}, {"t_min", c.schedule.t_min}, {"steps", c.schedule.steps}, {"rho", c.schedule.rho}};
    j["denoise"] = {{"samples", c.denoise.samples},
                    {"clip_factor", c.denoise.clip_factor},
                    {"trajectory_samples", c.denoise.trajectory_samples},
                    {"hist_lo", c.denoise.hist_lo},
                    {"hist_hi", c.denoise.hist_hi},
                    {"hist_bins", c.denoise.hist_bins}};
    j["nn"] = {{"hidden", c.nn.hidden}, {"embed", c.nn.embed},   {"lr", c.nn.lr},
               {"batch", c.nn.batch},   {"steps", c.nn.steps},   {"weight_decay", c.nn.weight_decay},
               {"t", c.nn.t},           {"t_lo", c.nn.t_lo},     {"lambdas", c.nn.lambdas},
               {"seeds", c.nn.seeds}};
    j["score_eval"] = {{"t", c.score_eval.t},
                       {"x_lo", c.score_eval.x_lo},
                       {"x_hi", c.score_eval.x_hi},
                       {"points", c.score_eval.points},
                       {"deltas", c.score_eval.deltas}};
    return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
    const Reader root(j, "");
    root.require("kind");
    root.require("seed");
    root.require("training_set");
    std::string kind_name;
    root.text("kind", kind_name);
    ExperimentKind kind;
    try {
        kind = parse_experiment_kind(kind_name);
    } catch (const ConfigError&) {
        throw ConfigError(root.where("kind") + "unknown experiment kind '" + kind_name + "'");
    }
    ExperimentConfig c = default_config(kind);
    root.count("seed", c.seed, true);
    root.text("output_dir", c.output_dir);

    const Reader ts = root.child("training_set");
    ts.require("layout");
    ts.text("layout", c.training_set.layout);
    if (c.training_set.layout != "uniform" && c.training_set.layout != "points" && c.training_set.layout != "nonuniform" &&
        c.training_set.layout != "circle")
        throw ConfigError(ts.where("layout") + "expected one of uniform, points, nonuniform, circle");
    ts.count("n", c.training_set.n);
    ts.positive("half_width", c.training_set.half_width);
    ts.count("dim", c.training_set.dim);
    ts.numbers("points", c.training_set.points);
    ts.number("jitter", c.training_set.jitter);
    ts.positive("radius", c.training_set.radius);
    if (c.training_set.layout == "points" && c.training_set.points.size() < 2)
        throw ConfigError(ts.where("points") + "the points layout needs at least two points");
    if (c.training_set.layout == "circle" && c.training_set.dim != 2)
        throw ConfigError(ts.where("dim") + "the circle layout lives in two dimensions");

    root.child("smoothing").positive("kappa", c.kappa);

    const Reader sc = root.child("schedule");
    sc.positive("t0", c.schedule.t0);
    sc.positive("t_min", c.schedule.t_min);
    sc.count("steps", c.schedule.steps);
    sc.positive("rho", c.schedule.rho);
    try {
        c.schedule.validate();
    } catch (const std::exception& e) {
        throw ConfigError(sc.where("") + e.what());
    }

    const Reader dn = root.child("denoise");
    dn.count("samples", c.denoise.samples);
    dn.positive("clip_factor", c.denoise.clip_factor);
    dn.count("trajectory_samples", c.denoise.trajectory_samples, true);
    dn.number("hist_lo", c.denoise.hist_lo);
    dn.number("hist_hi", c.denoise.hist_hi);
    dn.count("hist_bins", c.denoise.hist_bins);
    if (!(c.denoise.hist_hi > c.denoise.hist_lo)) throw ConfigError(dn.where("hist_hi") + "must exceed hist_lo");

    const Reader nn = root.child("nn");
    nn.count("hidden", c.nn.hidden);
    nn.count("embed", c.nn.embed);
    nn.positive("lr", c.nn.lr);
    nn.count("batch", c.nn.batch);
    nn.count("steps", c.nn.steps, true);
    nn.number("weight_decay", c.nn.weight_decay);
    if (c.nn.weight_decay < 0.0) throw ConfigError(nn.where("weight_decay") + "must be non-negative");
    nn.positive("t", c.nn.t);
    nn.positive("t_lo", c.nn.t_lo);
    nn.numbers("lambdas", c.nn.lambdas);
    for (double l : c.nn.lambdas)
        if (!(l >= 0.0)) throw ConfigError(nn.where("lambdas") + "entries must be non-negative");
    nn.count("seeds", c.nn.seeds);

    const Reader se = root.child("score_eval");
    se.positive("t", c.score_eval.t);
    se.number("x_lo", c.score_eval.x_lo);
    se.number("x_hi", c.score_eval.x_hi);
    se.count("points", c.score_eval.points);
    se.numbers("deltas", c.score_eval.deltas);
    if (!(c.score_eval.x_hi > c.score_eval.x_lo)) throw ConfigError(se.where("x_hi") + "must exceed x_lo");
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // byte offset -> line and column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
    }
    return config_from_json(j);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 1469598103934665603ULL;
    // the output location does not change what a run computes
    json j = to_json(cfg);
    j.erase("output_dir");
    for (unsigned char ch : j.dump()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

TrainingSet make_training_set(const ExperimentConfig& cfg) {
    const auto& s = cfg.training_set;
    if (s.layout == "uniform") return TrainingSet::uniform(s.n, s.half_width, s.dim);
    if (s.layout == "points") return TrainingSet::from_points(s.points, s.dim);
    if (s.layout == "nonuniform") return make_nonuniform_set(s.n, s.jitter, derive_seed(cfg.seed, 100)).with_ambient_dim(s.dim);
    throw ConfigError("the circle layout has no axis-aligned training set");
}

Eigen::MatrixXd make_anchor_matrix(const ExperimentConfig& cfg) {
    if (cfg.training_set.layout == "circle") return make_circle_set(cfg.training_set.n, cfg.training_set.radius);
    const TrainingSet ts = make_training_set(cfg);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(ts.ambient_dim()), static_cast<Eigen::Index>(ts.size()));
    for (std::size_t k = 0; k < ts.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = ts.embedded(k);
    return a;
}

TrainConfig make_train_config(const ExperimentConfig& cfg, double weight_decay, std::uint64_t seed) {
    TrainConfig t;
    t.optimizer.lr = cfg.nn.lr;
    t.optimizer.weight_decay = weight_decay;
    t.batch = cfg.nn.batch;
    t.steps = cfg.nn.steps;
    t.seed = seed;
    t.hidden = cfg.nn.hidden;
    t.embed = cfg.nn.embed;
    t.t_fixed = cfg.nn.t;
    t.t_lo = cfg.nn.t_lo;
    t.t_hi = cfg.schedule.t0;
    return t;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg) {
    const char* env = std::getenv("SCORESMOOTH_OUTPUT_ROOT");
    const std::filesystem::path root = env && *env ? env : "runs";
    if (cfg.output_dir.empty()) return root / (to_string(cfg.kind) + "-" + hash_hex(config_hash(cfg)).substr(0, 8));
    const std::filesystem::path p = cfg.output_dir;
    return p.is_absolute() ? p : root / p;
}

}  // namespace scoresmooth
