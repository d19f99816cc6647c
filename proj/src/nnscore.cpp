#include "scoresmooth/nnscore.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include "json.hpp"
#include "scoresmooth/errors.hpp"
#include "scoresmooth/normal.hpp"
#include "scoresmooth/quadrature.hpp"
#include "scoresmooth/sampling.hpp"
#include "scoresmooth/scorefield.hpp"

namespace scoresmooth {

std::string to_string(MlpArch a) {
    return a == MlpArch::FixedTime ? "fixed-t-skip-mlp" : "time-conditioned-3block";
}

const ParamGroup& MlpScoreModel::group(const std::string& name) const {
    for (const auto& g : groups_)
        if (g.name == name) return g;
    throw ParameterError("no parameter group named " + name);
}

std::size_t MlpScoreModel::add_group(const std::string& name, std::size_t size, bool decay) {
    const std::size_t offset = groups_.empty() ? 0 : groups_.back().offset + groups_.back().size;
    groups_.push_back({name, offset, size, decay});
    return offset;
}

Eigen::Map<Eigen::MatrixXd> MlpScoreModel::mat(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    const auto& g = group(name);
    return {params_.data() + g.offset, rows, cols};
}

Eigen::Map<const Eigen::MatrixXd> MlpScoreModel::mat(const std::string& name, Eigen::Index rows,
                                                     Eigen::Index cols) const {
    const auto& g = group(name);
    return {params_.data() + g.offset, rows, cols};
}

Eigen::VectorXd MlpScoreModel::evaluate(const Eigen::VectorXd& x, double t) const {
    if (static_cast<std::size_t>(x.size()) != dim()) throw DomainError("input dimension does not match the model");
    Eigen::MatrixXd out;
    forward(x, Eigen::RowVectorXd::Constant(1, t), out);
    return out.col(0);
}

namespace {

// PyTorch's default Linear initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
void init_uniform(Eigen::VectorXd& p, const ParamGroup& g, std::size_t fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (std::size_t i = 0; i < g.size; ++i) p(static_cast<Eigen::Index>(g.offset + i)) = u(rng);
}

void accumulate(Eigen::VectorXd& grad, const ParamGroup& g, const Eigen::MatrixXd& value) {
    grad.segment(static_cast<Eigen::Index>(g.offset), static_cast<Eigen::Index>(g.size)) +=
        Eigen::Map<const Eigen::VectorXd>(value.data(), value.size());
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& a) { return a.cwiseMax(0.0); }

Eigen::MatrixXd relu_grad(const Eigen::MatrixXd& pre, const Eigen::MatrixXd& upstream) {
    return (pre.array() > 0.0).select(upstream, 0.0);
}

void check_input(const MlpScoreModel& m, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t) {
    if (static_cast<std::size_t>(x.rows()) != m.dim())
        throw DomainError("input has dimension " + std::to_string(x.rows()) + ", model expects " + std::to_string(m.dim()));
    if (m.time_conditioned()) {
        if (t.size() != x.cols()) throw DomainError("time-conditioned model needs one time per input column");
        if (!(t.array() > 0.0).all()) throw DomainError("times must be positive");
    }
}

}  // namespace

FixedTimeMlp::FixedTimeMlp(std::size_t dim, std::size_t hidden, std::uint64_t seed) : dim_(dim), hidden_(hidden) {
    if (dim < 1 || hidden < 1) throw ParameterError("model dimensions must be positive");
    add_group("skip.weight", dim * dim, false);
    add_group("skip.bias", dim, false);
    add_group("mlp.w1", hidden * dim, true);
    add_group("mlp.b1", hidden, true);
    add_group("mlp.w2", dim * hidden, true);
    add_group("mlp.b2", dim, true);
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups_.back().offset + groups_.back().size));
    Rng rng(seed);
    init_uniform(params_, group("skip.weight"), dim, rng);
    init_uniform(params_, group("skip.bias"), dim, rng);
    init_uniform(params_, group("mlp.w1"), dim, rng);
    init_uniform(params_, group("mlp.b1"), dim, rng);
    init_uniform(params_, group("mlp.w2"), hidden, rng);
    init_uniform(params_, group("mlp.b2"), hidden, rng);
}

void FixedTimeMlp::forward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out,
                           ForwardCache* cache) const {
    check_input(*this, x, t);
    const auto d = static_cast<Eigen::Index>(dim_), h = static_cast<Eigen::Index>(hidden_);
    Eigen::MatrixXd pre = mat("mlp.w1", h, d) * x;
    pre.colwise() += mat("mlp.b1", h, 1).col(0);
    Eigen::MatrixXd act = relu(pre);
    out = mat("skip.weight", d, d) * x + mat("mlp.w2", d, h) * act;
    out.colwise() += mat("skip.bias", d, 1).col(0) + mat("mlp.b2", d, 1).col(0);
    if (cache) cache->mats = {std::move(pre), std::move(act)};
}

void FixedTimeMlp::backward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd&, const ForwardCache& cache,
                            const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const {
    const auto d = static_cast<Eigen::Index>(dim_), h = static_cast<Eigen::Index>(hidden_);
    const Eigen::MatrixXd& pre = cache.mats.at(0);
    const Eigen::MatrixXd& act = cache.mats.at(1);
    const Eigen::VectorXd dsum = dout.rowwise().sum();
    accumulate(grad, group("skip.weight"), dout * x.transpose());
    accumulate(grad, group("skip.bias"), dsum);
    accumulate(grad, group("mlp.w2"), dout * act.transpose());
    accumulate(grad, group("mlp.b2"), dsum);
    const Eigen::MatrixXd dpre = relu_grad(pre, mat("mlp.w2", d, h).transpose() * dout);
    accumulate(grad, group("mlp.w1"), dpre * x.transpose());
    accumulate(grad, group("mlp.b1"), dpre.rowwise().sum());
}

TimeConditionedMlp::TimeConditionedMlp(std::size_t dim, std::size_t hidden, std::size_t embed, std::uint64_t seed)
    : dim_(dim), hidden_(hidden), embed_(embed) {
    if (dim < 1 || hidden < 1 || embed < 1) throw ParameterError("model dimensions must be positive");
    add_group("shared.weight", hidden, false);
    add_group("shared.bias", hidden, false);
    add_group("embed.weight", embed * hidden, false);
    add_group("embed.bias", embed, false);
    add_group("block2.w1", hidden * (dim + embed), true);
    add_group("block2.b1", hidden, true);
    add_group("block2.w2", dim * hidden, true);
    add_group("block2.b2", dim, true);
    add_group("mod.weight", dim * hidden, false);
    add_group("mod.bias", dim, false);
    params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(groups_.back().offset + groups_.back().size));
    Rng rng(seed);
    init_uniform(params_, group("shared.weight"), 1, rng);
    init_uniform(params_, group("shared.bias"), 1, rng);
    init_uniform(params_, group("embed.weight"), hidden, rng);
    init_uniform(params_, group("embed.bias"), hidden, rng);
    init_uniform(params_, group("block2.w1"), dim + embed, rng);
    init_uniform(params_, group("block2.b1"), dim + embed, rng);
    init_uniform(params_, group("block2.w2"), hidden, rng);
    init_uniform(params_, group("block2.b2"), hidden, rng);
    // mod.* stay zero so the modulation starts as the identity
}

void TimeConditionedMlp::forward_unscaled(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t,
                                          Eigen::MatrixXd& out) const {
    ForwardCache cache;
    forward(x, t, out, &cache);
    out = cache.mats.at(5).cwiseProduct((1.0 + cache.mats.at(6).array()).matrix());
}

void TimeConditionedMlp::forward(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, Eigen::MatrixXd& out,
                                 ForwardCache* cache) const {
    check_input(*this, x, t);
    const auto d = static_cast<Eigen::Index>(dim_), h = static_cast<Eigen::Index>(hidden_),
               e = static_cast<Eigen::Index>(embed_);
    const Eigen::RowVectorXd logt = t.array().log().matrix();
    Eigen::MatrixXd pre0 = mat("shared.weight", h, 1) * logt;
    pre0.colwise() += mat("shared.bias", h, 1).col(0);
    Eigen::MatrixXd act0 = relu(pre0);

    Eigen::MatrixXd z(d + e, x.cols());
    z.topRows(d) = x;
    z.bottomRows(e) = mat("embed.weight", e, h) * act0;
    z.bottomRows(e).colwise() += mat("embed.bias", e, 1).col(0);

    Eigen::MatrixXd pre2 = mat("block2.w1", h, d + e) * z;
    pre2.colwise() += mat("block2.b1", h, 1).col(0);
    Eigen::MatrixXd act2 = relu(pre2);
    Eigen::MatrixXd o = mat("block2.w2", d, h) * act2;
    o.colwise() += mat("block2.b2", d, 1).col(0);
    Eigen::MatrixXd m = mat("mod.weight", d, h) * act0;
    m.colwise() += mat("mod.bias", d, 1).col(0);

    const Eigen::RowVectorXd inv_sqrt_t = t.array().rsqrt().matrix();
    out = (o.array() * (1.0 + m.array())).matrix();
    out.array().rowwise() *= inv_sqrt_t.array();
    if (cache) {
        cache->mats = {std::move(pre0), std::move(act0), std::move(z), std::move(pre2), std::move(act2), std::move(o),
                       std::move(m)};
        cache->aux = inv_sqrt_t;
    }
}

void TimeConditionedMlp::backward(const Eigen::MatrixXd&, const Eigen::RowVectorXd& t, const ForwardCache& cache,
                                  const Eigen::MatrixXd& dout, Eigen::VectorXd& grad) const {
    const auto d = static_cast<Eigen::Index>(dim_), h = static_cast<Eigen::Index>(hidden_),
               e = static_cast<Eigen::Index>(embed_);
    const auto& [pre0, act0, z, pre2, act2, o, m] =
        std::tie(cache.mats.at(0), cache.mats.at(1), cache.mats.at(2), cache.mats.at(3), cache.mats.at(4),
                 cache.mats.at(5), cache.mats.at(6));

    Eigen::MatrixXd du = dout;
    du.array().rowwise() *= cache.aux.array();
    const Eigen::MatrixXd dO = (du.array() * (1.0 + m.array())).matrix();
    const Eigen::MatrixXd dM = (du.array() * o.array()).matrix();

    accumulate(grad, group("mod.weight"), dM * act0.transpose());
    accumulate(grad, group("mod.bias"), dM.rowwise().sum());
    Eigen::MatrixXd dact0 = mat("mod.weight", d, h).transpose() * dM;

    accumulate(grad, group("block2.w2"), dO * act2.transpose());
    accumulate(grad, group("block2.b2"), dO.rowwise().sum());
    const Eigen::MatrixXd dpre2 = relu_grad(pre2, mat("block2.w2", d, h).transpose() * dO);
    accumulate(grad, group("block2.w1"), dpre2 * z.transpose());
    accumulate(grad, group("block2.b1"), dpre2.rowwise().sum());
    const Eigen::MatrixXd dE = (mat("block2.w1", h, d + e).transpose() * dpre2).bottomRows(e);

    accumulate(grad, group("embed.weight"), dE * act0.transpose());
    accumulate(grad, group("embed.bias"), dE.rowwise().sum());
    dact0 += mat("embed.weight", e, h).transpose() * dE;

    const Eigen::MatrixXd dpre0 = relu_grad(pre0, dact0);
    const Eigen::RowVectorXd logt = t.array().log().matrix();
    accumulate(grad, group("shared.weight"), dpre0 * logt.transpose());
    accumulate(grad, group("shared.bias"), dpre0.rowwise().sum());
}

double batch_loss(const MlpScoreModel& model, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t,
                  const Eigen::MatrixXd& target, Eigen::VectorXd* grad) {
    if (t.size() != x.cols() || target.rows() != x.rows() || target.cols() != x.cols())
        throw DomainError("batch, times and targets must have matching shapes");
    // column blocks keep the hidden activations cache-resident
    constexpr Eigen::Index kBlock = 64;
    const double m = static_cast<double>(x.cols());
    if (grad) grad->setZero(static_cast<Eigen::Index>(model.param_count()));
    ForwardCache cache;
    Eigen::MatrixXd xb, out, diff;
    Eigen::RowVectorXd tb;
    double loss = 0.0;
    for (Eigen::Index start = 0; start < x.cols(); start += kBlock) {
        const Eigen::Index w = std::min(kBlock, x.cols() - start);
        xb = x.middleCols(start, w);
        tb = t.segment(start, w);
        model.forward(xb, tb, out, grad ? &cache : nullptr);
        diff = out - target.middleCols(start, w);
        loss += (diff.colwise().squaredNorm().array() * tb.array()).sum();
        if (grad) {
            diff.array().rowwise() *= (2.0 / m) * tb.array();
            model.backward(xb, tb, cache, diff, *grad);
        }
    }
    return loss / m;
}

void adamw_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const std::vector<ParamGroup>& groups,
                const std::vector<bool>& decay_mask, const AdamWConfig& cfg, AdamWState& state) {
    if (grad.size() != params.size()) throw DomainError("gradient and parameter sizes differ");
    if (decay_mask.size() != groups.size()) throw ParameterError("decay mask must cover every parameter group");
    if (!grad.allFinite()) {
        Eigen::Index bad = 0;
        while (bad < grad.size() && std::isfinite(grad(bad))) ++bad;
        std::string where = "?";
        for (const auto& g : groups)
            if (static_cast<std::size_t>(bad) >= g.offset && static_cast<std::size_t>(bad) < g.offset + g.size) where = g.name;
        throw NumericError("non-finite gradient at step " + std::to_string(state.step + 1) + " in group " + where);
    }
    if (state.m.size() != params.size()) {
        state.m = Eigen::VectorXd::Zero(params.size());
        state.v = Eigen::VectorXd::Zero(params.size());
        state.step = 0;
    }
    ++state.step;
    if (cfg.weight_decay != 0.0) {
        const double shrink = 1.0 - cfg.lr * cfg.weight_decay;
        for (std::size_t i = 0; i < groups.size(); ++i)
            if (decay_mask[i])
                params.segment(static_cast<Eigen::Index>(groups[i].offset), static_cast<Eigen::Index>(groups[i].size)) *= shrink;
    }
    state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    params.array() -= cfg.lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

std::vector<bool> default_decay_mask(const MlpScoreModel& model) {
    std::vector<bool> mask;
    for (const auto& g : model.groups()) mask.push_back(g.decay);
    return mask;
}

void TrainConfig::validate() const {
    if (!(optimizer.lr >= 0.0) || !(optimizer.weight_decay >= 0.0)) throw ParameterError("lr and weight decay must be non-negative");
    if (!(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0))
        throw ParameterError("Adam betas must lie in [0, 1)");
    if (!(optimizer.eps > 0.0)) throw ParameterError("Adam eps must be positive");
    if (batch < 1 || steps < 1) throw ParameterError("batch and steps must be positive");
    if (hidden < 1 || embed < 1) throw ParameterError("hidden and embed widths must be positive");
    if (log_every < 1) throw ParameterError("log_every must be positive");
    if (time_sampling == TimeSampling::Fixed && !(t_fixed > 0.0)) throw ParameterError("t_fixed must be positive");
    if (time_sampling == TimeSampling::CubeRootUniform && !(t_lo > 0.0 && t_hi > t_lo))
        throw ParameterError("time range needs 0 < t_lo < t_hi");
}

namespace {

// Empirical score of every column of x at its own time, anchors in general position.
Eigen::MatrixXd empirical_targets(const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, const Eigen::MatrixXd& anchors) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    Eigen::VectorXd logits(anchors.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        logits = -(anchors.colwise() - x.col(j)).colwise().squaredNorm().transpose() / (2.0 * t(j));
        const Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp().matrix();
        out.col(j) = (anchors * w / w.sum() - x.col(j)) / t(j);
    }
    return out;
}

Eigen::MatrixXd anchors_of(const TrainingSet& ts) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(ts.ambient_dim()), static_cast<Eigen::Index>(ts.size()));
    for (std::size_t k = 0; k < ts.size(); ++k) a.col(static_cast<Eigen::Index>(k)) = ts.embedded(k);
    return a;
}

TrainResult run_training(std::unique_ptr<MlpScoreModel> model, const Eigen::MatrixXd& anchors, const TrainConfig& cfg) {
    const std::vector<bool> mask = cfg.decay_mask.empty() ? default_decay_mask(*model) : cfg.decay_mask;
    if (mask.size() != model->groups().size()) throw ParameterError("decay mask must cover every parameter group");

    Rng rng(derive_seed(cfg.seed, 1));
    std::uniform_int_distribution<Eigen::Index> pick(0, anchors.cols() - 1);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double c_lo = std::cbrt(cfg.t_lo), c_hi = std::cbrt(cfg.t_hi);

    const auto d = anchors.rows();
    const auto b = static_cast<Eigen::Index>(cfg.batch);
    Eigen::MatrixXd x(d, b);
    Eigen::RowVectorXd t(b);
    Eigen::VectorXd grad;
    AdamWState state;

    TrainResult result;
    const std::size_t window = std::min<std::size_t>(1000, cfg.steps);
    double head = 0.0, tail = 0.0;
    for (std::size_t step = 0; step < cfg.steps; ++step) {
        for (Eigen::Index j = 0; j < b; ++j) {
            if (cfg.time_sampling == TimeSampling::Fixed) {
                t(j) = cfg.t_fixed;
            } else {
                const double c = c_lo + (c_hi - c_lo) * unit(rng);
                t(j) = c * c * c;
            }
            const Eigen::Index k = pick(rng);
            const double sd = std::sqrt(t(j));
            for (Eigen::Index i = 0; i < d; ++i) x(i, j) = anchors(i, k) + sd * noise(rng);
        }
        const Eigen::MatrixXd target = empirical_targets(x, t, anchors);
        const double loss = batch_loss(*model, x, t, target, &grad);
        if (!std::isfinite(loss) || loss > 1e6)
            throw NumericError("training diverged at step " + std::to_string(step) + " (loss " + std::to_string(loss) + ")");
        adamw_step(model->params(), grad, model->groups(), mask, cfg.optimizer, state);

        if (step < window) head += loss;
        if (step + window >= cfg.steps) tail += loss;
        if (step % cfg.log_every == 0 || step + 1 == cfg.steps) result.curve.push_back({step, loss});
        result.final_loss = loss;
    }
    result.head_loss = head / static_cast<double>(window);
    result.tail_loss = tail / static_cast<double>(window);
    result.model = std::move(model);
    return result;
}

}  // namespace

TrainResult train_fixed_t(const TrainingSet& ts, double t, const TrainConfig& cfg) {
    if (!(t > 0.0)) throw DomainError("time must be positive");
    TrainConfig c = cfg;
    c.time_sampling = TimeSampling::Fixed;
    c.t_fixed = t;
    c.validate();
    auto model = std::make_unique<FixedTimeMlp>(ts.ambient_dim(), c.hidden, derive_seed(c.seed, 0));
    return run_training(std::move(model), anchors_of(ts), c);
}

TrainResult train_time_conditioned(const TrainingSet& ts, const TrainConfig& cfg) {
    return train_time_conditioned(anchors_of(ts), cfg);
}

TrainResult train_time_conditioned(const Eigen::MatrixXd& anchors, const TrainConfig& cfg) {
    if (anchors.cols() < 1 || anchors.rows() < 1) throw ParameterError("need at least one anchor");
    TrainConfig c = cfg;
    c.time_sampling = TimeSampling::CubeRootUniform;
    c.validate();
    auto model = std::make_unique<TimeConditionedMlp>(static_cast<std::size_t>(anchors.rows()), c.hidden, c.embed,
                                                      derive_seed(c.seed, 0));
    return run_training(std::move(model), anchors, c);
}

NeuralScoreField::NeuralScoreField(std::shared_ptr<const MlpScoreModel> model, std::string label)
    : model_(std::move(model)), label_(std::move(label)) {
    if (!model_) throw ParameterError("neural score field needs a model");
}

Eigen::VectorXd NeuralScoreField::evaluate(const Eigen::VectorXd& x, double t) const { return model_->evaluate(x, t); }

void NeuralScoreField::evaluate_batch(const Eigen::MatrixXd& x, double t, Eigen::MatrixXd& out) const {
    model_->forward(x, Eigen::RowVectorXd::Constant(x.cols(), t), out);
}

DeltaFit fit_delta(const std::function<double(double)>& f, double t, const TrainingSet& ts,
                   const std::vector<double>& delta_grid) {
    if (delta_grid.empty()) throw ParameterError("delta grid is empty");
    if (!(t > 0.0)) throw DomainError("time must be positive");
    for (double d : delta_grid)
        if (!(d > 0.0 && d < ts.half_spacing())) throw ParameterError("delta grid values must lie in (0, Delta)");

    // One fixed node set (8-point Gauss-Legendre on panels of sd/8 over +-10 sd per
    // component) so f is evaluated once and every delta reuses the values.
    const double sd = std::sqrt(t);
    const auto& rule = gauss_legendre(8);
    const double h = sd / 8.0;
    std::vector<double> xs, ws;
    for (double y : ts.points()) {
        for (int p = -80; p < 80; ++p) {
            const double mid = y + (p + 0.5) * h;
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double x = mid + 0.5 * h * rule.nodes[q];
                const double u = (x - y) / sd;
                xs.push_back(x);
                ws.push_back(0.5 * h * rule.weights[q] * normal_pdf(u) / (sd * static_cast<double>(ts.size())));
            }
        }
    }
    std::vector<double> fx(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) fx[i] = f(xs[i]);
    const auto distance = [&](const auto& g) {
        double sum = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double diff = fx[i] - g(xs[i]);
            sum += ws[i] * diff * diff;
        }
        return sum;
    };

    DeltaFit fit;
    fit.grid = delta_grid;
    fit.distance.reserve(delta_grid.size());
    double best = std::numeric_limits<double>::infinity();
    for (double delta : delta_grid) {
        const double dist = distance([&](double x) { return smoothed_pl_esf(x, t, delta, ts); });
        fit.distance.push_back(dist);
        if (dist < best || (dist == best && delta < fit.best_delta)) {
            best = dist;
            fit.best_delta = delta;
        }
    }
    fit.distance_to_esf = distance([&](double x) { return esf_1d(x, t, ts); });
    return fit;
}

Eigen::MatrixXd make_circle_set(std::size_t n, double radius) {
    if (n < 3) throw ParameterError("a circle set needs n >= 3");
    if (!(radius > 0.0)) throw ParameterError("radius must be positive");
    Eigen::MatrixXd pts(2, static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        pts(0, static_cast<Eigen::Index>(k)) = radius * std::cos(a);
        pts(1, static_cast<Eigen::Index>(k)) = radius * std::sin(a);
    }
    return pts;
}

TrainingSet make_nonuniform_set(std::size_t n, double jitter, std::uint64_t seed) {
    if (n < 2) throw ParameterError("need at least two points");
    const double half_gap = 1.0 / static_cast<double>(n - 1);
    if (!(jitter >= 0.0 && jitter < half_gap))
        throw ParameterError("jitter must lie in [0, " + std::to_string(half_gap) + ")");
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-jitter, jitter);
    std::vector<double> pts(n);
    for (std::size_t k = 0; k < n; ++k) pts[k] = -1.0 + 2.0 * half_gap * static_cast<double>(k) + u(rng);
    return TrainingSet::from_points(std::move(pts));
}

void save_checkpoint(const MlpScoreModel& model, const TrainConfig& cfg, const std::string& stem) {
    nlohmann::json j;
    j["arch"] = to_string(model.arch());
    j["dim"] = model.dim();
    j["hidden"] = model.hidden();
    if (const auto* tc = dynamic_cast<const TimeConditionedMlp*>(&model)) j["embed"] = tc->embed();
    j["param_count"] = model.param_count();
    j["seed"] = cfg.seed;
    j["config"] = {{"lr", cfg.optimizer.lr},
                   {"weight_decay", cfg.optimizer.weight_decay},
                   {"batch", cfg.batch},
                   {"steps", cfg.steps},
                   {"time_sampling", cfg.time_sampling == TimeSampling::Fixed ? "fixed" : "cube-root-uniform"},
                   {"t_fixed", cfg.t_fixed},
                   {"t_lo", cfg.t_lo},
                   {"t_hi", cfg.t_hi}};
    for (const auto& g : model.groups())
        j["groups"].push_back({{"name", g.name}, {"offset", g.offset}, {"size", g.size}, {"decay", g.decay}});
    j["payload"] = {{"file", stem.substr(stem.find_last_of('/') + 1) + ".bin"}, {"dtype", "float64-le"}};

    std::ofstream header(stem + ".json");
    if (!header) throw std::runtime_error("cannot write " + stem + ".json");
    header << j.dump(2) << "\n";
    std::ofstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write " + stem + ".bin");
    bin.write(reinterpret_cast<const char*>(model.params().data()),
              static_cast<std::streamsize>(model.param_count() * sizeof(double)));
}

std::unique_ptr<MlpScoreModel> load_checkpoint(const std::string& stem) {
    std::ifstream header(stem + ".json");
    if (!header) throw std::runtime_error("cannot read " + stem + ".json");
    const nlohmann::json j = nlohmann::json::parse(header);
    const std::string arch = j.at("arch").get<std::string>();
    const auto dim = j.at("dim").get<std::size_t>();
    const auto hidden = j.at("hidden").get<std::size_t>();
    std::unique_ptr<MlpScoreModel> model;
    if (arch == to_string(MlpArch::FixedTime))
        model = std::make_unique<FixedTimeMlp>(dim, hidden, 0);
    else if (arch == to_string(MlpArch::TimeConditioned))
        model = std::make_unique<TimeConditionedMlp>(dim, hidden, j.at("embed").get<std::size_t>(), 0);
    else
        throw ParameterError("unknown architecture " + arch);
    if (model->param_count() != j.at("param_count").get<std::size_t>())
        throw ParameterError("checkpoint parameter count does not match its architecture");
    std::ifstream bin(stem + ".bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot read " + stem + ".bin");
    bin.read(reinterpret_cast<char*>(model->params().data()),
             static_cast<std::streamsize>(model->param_count() * sizeof(double)));
    if (bin.gcount() != static_cast<std::streamsize>(model->param_count() * sizeof(double)))
        throw ParameterError("checkpoint payload is truncated");
    return model;
}

}  // namespace scoresmooth
