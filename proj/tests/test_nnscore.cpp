#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <vector>

#include "scoresmooth/errors.hpp"
#include "scoresmooth/nnscore.hpp"
#include "scoresmooth/sampling.hpp"
#include "scoresmooth/scorefield.hpp"

using namespace scoresmooth;

namespace {

// Central differences of batch_loss against every parameter.
Eigen::VectorXd numeric_gradient(MlpScoreModel& m, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t,
                                 const Eigen::MatrixXd& target) {
    Eigen::VectorXd g(m.params().size());
    for (Eigen::Index i = 0; i < g.size(); ++i) {
        const double keep = m.params()(i);
        const double h = 1e-6 * std::max(1.0, std::abs(keep));
        m.params()(i) = keep + h;
        const double up = batch_loss(m, x, t, target);
        m.params()(i) = keep - h;
        const double down = batch_loss(m, x, t, target);
        m.params()(i) = keep;
        g(i) = (up - down) / (2 * h);
    }
    return g;
}

void check_gradient(MlpScoreModel& m, const Eigen::MatrixXd& x, const Eigen::RowVectorXd& t, const Eigen::MatrixXd& target) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(m.params().size());
    batch_loss(m, x, t, target, &grad);
    const Eigen::VectorXd num = numeric_gradient(m, x, t, target);
    CHECK((grad - num).norm() <= 1e-5 * std::max(1.0, num.norm()));
}

}  // namespace

TEST_CASE("fixed-time model layout") {
    FixedTimeMlp m(1, 16, 3);
    CHECK(m.param_count() == 1 + 1 + 16 + 16 + 16 + 1);
    std::size_t covered = 0;
    for (const auto& g : m.groups()) {
        CHECK(g.offset == covered);
        covered += g.size;
    }
    CHECK(covered == m.param_count());
    CHECK_FALSE(m.group("skip.weight").decay);
    CHECK_FALSE(m.group("skip.bias").decay);
    CHECK(m.group("mlp.w1").decay);
    CHECK(FixedTimeMlp(1, 16, 3).params() == m.params());
    CHECK(FixedTimeMlp(1, 16, 4).params() != m.params());
    CHECK_THROWS_AS(m.group("nope"), ParameterError);
}

TEST_CASE("fixed-time forward matches a hand evaluation") {
    FixedTimeMlp m(1, 4, 11);
    const Eigen::VectorXd& p = m.params();
    auto at = [&](const char* name, std::size_t i) { return p(static_cast<Eigen::Index>(m.group(name).offset + i)); };
    for (double x : {-1.3, 0.0, 0.4, 2.2}) {
        double y = at("skip.weight", 0) * x + at("skip.bias", 0) + at("mlp.b2", 0);
        for (std::size_t j = 0; j < 4; ++j) y += at("mlp.w2", j) * std::max(0.0, at("mlp.w1", j) * x + at("mlp.b1", j));
        Eigen::VectorXd v(1);
        v << x;
        CHECK(m.evaluate(v, 0.05)(0) == doctest::Approx(y).epsilon(1e-13));
    }
}

TEST_CASE("backpropagation matches finite differences") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g(0.0, 1.0);
    {
        FixedTimeMlp m(1, 8, 5);
        Eigen::MatrixXd x(1, 7), target(1, 7);
        for (int j = 0; j < 7; ++j) x(0, j) = g(rng), target(0, j) = 3 * g(rng);
        check_gradient(m, x, Eigen::RowVectorXd::Constant(7, 0.05), target);
    }
    {
        TimeConditionedMlp m(2, 6, 3, 7);
        // move the zero-initialised modulation block off zero so its gradient path is exercised
        for (const char* name : {"mod.weight", "mod.bias"}) {
            const auto& grp = m.group(name);
            for (std::size_t i = 0; i < grp.size; ++i) m.params()(static_cast<Eigen::Index>(grp.offset + i)) = 0.3 * g(rng);
        }
        Eigen::MatrixXd x(2, 5), target(2, 5);
        Eigen::RowVectorXd t(5);
        for (int j = 0; j < 5; ++j) {
            x(0, j) = g(rng), x(1, j) = g(rng);
            target(0, j) = g(rng), target(1, j) = g(rng);
            t(j) = 1e-3 + 0.02 * std::abs(g(rng));
        }
        check_gradient(m, x, t, target);
    }
}

TEST_CASE("time-conditioned model scales its output by 1/sqrt(t)") {
    TimeConditionedMlp m(2, 8, 4, 1);
    Eigen::MatrixXd x(2, 3);
    x << 0.1, -0.5, 1.2, 0.3, 0.0, -0.7;
    const Eigen::RowVectorXd t = (Eigen::RowVectorXd(3) << 1e-4, 0.01, 0.5).finished();
    Eigen::MatrixXd scaled, raw;
    m.forward(x, t, scaled);
    m.forward_unscaled(x, t, raw);
    for (int j = 0; j < 3; ++j) CHECK((scaled.col(j) - raw.col(j) / std::sqrt(t(j))).norm() <= 1e-12 * scaled.col(j).norm());
    for (const char* name : {"mod.weight", "mod.bias"}) {
        const auto& grp = m.group(name);
        CHECK(m.params().segment(static_cast<Eigen::Index>(grp.offset), static_cast<Eigen::Index>(grp.size)).isZero());
        CHECK_FALSE(grp.decay);
    }
    CHECK(m.group("block2.w1").decay);
    CHECK_FALSE(m.group("shared.weight").decay);
    CHECK_THROWS_AS(m.forward(x, Eigen::RowVectorXd::Constant(3, -1.0), scaled), DomainError);
    CHECK_THROWS_AS(m.forward(x, Eigen::RowVectorXd::Constant(2, 0.1), scaled), DomainError);
}

TEST_CASE("one AdamW step by hand") {
    Eigen::VectorXd p(3), grad(3);
    p << 1.0, -2.0, 0.5;
    grad << 0.1, -0.4, 0.0;
    const std::vector<ParamGroup> groups{{"a", 0, 2, true}, {"b", 2, 1, false}};
    AdamWConfig cfg;
    cfg.lr = 0.01;
    cfg.weight_decay = 0.5;
    AdamWState st;
    adamw_step(p, grad, groups, {true, false}, cfg, st);
    // first step: m_hat = g, v_hat = g^2, update = lr g / (|g| + eps)
    CHECK(p(0) == doctest::Approx(1.0 * (1 - 0.005) - 0.01 * 0.1 / (0.1 + 1e-8)).epsilon(1e-14));
    CHECK(p(1) == doctest::Approx(-2.0 * (1 - 0.005) + 0.01 * 0.4 / (0.4 + 1e-8)).epsilon(1e-14));
    CHECK(p(2) == 0.5);
    CHECK(st.step == 1);

    Eigen::VectorXd q = p;
    adamw_step(q, grad, groups, {false, false}, cfg, st);
    CHECK(q(2) == 0.5);
    const double m2 = 0.9 * 0.1 * 0.1 + 0.1 * 0.1, v2 = 0.999 * 0.001 * 0.01 + 0.001 * 0.01;
    const double expected = p(0) - 0.01 * (m2 / (1 - 0.81)) / (std::sqrt(v2 / (1 - 0.999 * 0.999)) + 1e-8);
    CHECK(q(0) == doctest::Approx(expected).epsilon(1e-13));

    Eigen::VectorXd bad = grad;
    bad(1) = NAN;
    CHECK_THROWS_WITH_AS(adamw_step(p, bad, groups, {true, false}, cfg, st), doctest::Contains("a"), NumericError);
    CHECK_THROWS_AS(adamw_step(p, grad, groups, {true}, cfg, st), ParameterError);
}

TEST_CASE("training config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.batch = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.optimizer.lr = -1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.time_sampling = TimeSampling::CubeRootUniform;
    c.t_lo = 0.1;
    c.t_hi = 0.01;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = TrainConfig{};
    c.decay_mask = {true};
    CHECK_THROWS_AS(train_fixed_t(TrainingSet::uniform(2), 0.05, c), ParameterError);
}

TEST_CASE("short fixed-time training lowers the loss and is reproducible") {
    TrainConfig c;
    c.steps = 2000;
    c.batch = 256;
    c.hidden = 32;
    c.optimizer.lr = 1e-3;
    c.seed = 4;
    const auto ts = TrainingSet::uniform(2);
    const auto a = train_fixed_t(ts, 0.05, c);
    const auto b = train_fixed_t(ts, 0.05, c);
    CHECK(a.model->params() == b.model->params());
    REQUIRE(a.curve.size() >= 2);
    CHECK(a.tail_loss < 0.5 * a.head_loss);
    CHECK(a.curve.back().step <= 2000);
    CHECK(a.curve[1].step - a.curve[0].step == 50);
    CHECK(std::isfinite(a.final_loss));
}

TEST_CASE("short time-conditioned training runs") {
    TrainConfig c;
    c.steps = 60;
    c.batch = 128;
    c.hidden = 16;
    c.embed = 4;
    c.time_sampling = TimeSampling::CubeRootUniform;
    c.optimizer.lr = 1e-3;
    c.optimizer.weight_decay = 3.0;
    const auto r = train_time_conditioned(TrainingSet::uniform(4, 1.0, 2), c);
    CHECK(r.model->time_conditioned());
    CHECK(std::isfinite(r.final_loss));
    NeuralScoreField f(std::shared_ptr<const MlpScoreModel>(r.model->clone()));
    Eigen::MatrixXd x(2, 4), out;
    x << 0.1, -0.4, 0.9, 2.0, 0.0, 0.3, -0.2, 1.0;
    f.evaluate_batch(x, 0.01, out);
    for (int j = 0; j < 4; ++j) CHECK((out.col(j) - f.evaluate(x.col(j), 0.01)).norm() <= 1e-12 * (1 + out.col(j).norm()));
}

TEST_CASE("fit_delta recovers the smoothing width of an exact smoothed score") {
    const auto ts = TrainingSet::uniform(2);
    const double t = 0.05;
    std::vector<double> grid;
    for (int i = 1; i < 100; ++i) grid.push_back(0.01 * i);
    for (double truth : {0.12, 0.35, 0.64}) {
        const auto fit = fit_delta([&](double x) { return smoothed_pl_esf(x, t, truth, ts); }, t, ts, grid);
        CHECK(fit.best_delta == doctest::Approx(truth).epsilon(1e-12));
        CHECK(fit.distance.size() == grid.size());
        CHECK(fit.distance_to_esf > 0.0);
    }
    const auto esf_fit = fit_delta([&](double x) { return esf_1d(x, t, ts); }, t, ts, grid);
    CHECK(esf_fit.distance_to_esf == doctest::Approx(0.0).epsilon(1e-20));
    CHECK_THROWS_AS(fit_delta([](double) { return 0.0; }, t, ts, {1.0}), ParameterError);
    CHECK_THROWS_AS(fit_delta([](double) { return 0.0; }, t, ts, {}), ParameterError);
}

TEST_CASE("synthetic training sets") {
    const Eigen::MatrixXd c = make_circle_set(8);
    REQUIRE(c.cols() == 8);
    for (int j = 0; j < 8; ++j) {
        CHECK(c.col(j).norm() == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(std::atan2(c(1, j), c(0, j)) == doctest::Approx(std::remainder(2 * std::numbers::pi * j / 8, 2 * std::numbers::pi)));
    }
    CHECK_THROWS_AS(make_circle_set(2), ParameterError);

    const auto ts = make_nonuniform_set(6, 0.1, 3);
    REQUIRE(ts.size() == 6);
    for (std::size_t k = 0; k < 6; ++k) CHECK(std::abs(ts.point(k) - (-1.0 + 0.4 * static_cast<double>(k))) <= 0.1);
    CHECK(make_nonuniform_set(6, 0.1, 3).points()[2] == ts.points()[2]);
    CHECK_THROWS_AS(make_nonuniform_set(6, 0.3, 3), ParameterError);
}

TEST_CASE("checkpoint round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "scoresmooth_ckpt_test";
    std::filesystem::create_directories(dir);
    TrainConfig cfg;
    cfg.seed = 12;
    TimeConditionedMlp m(2, 8, 4, 9);
    m.params()(3) = 0.125;
    const std::string stem = (dir / "tc").string();
    save_checkpoint(m, cfg, stem);
    const auto back = load_checkpoint(stem);
    CHECK(back->arch() == MlpArch::TimeConditioned);
    CHECK(back->params() == m.params());
    CHECK(back->hidden() == 8);

    FixedTimeMlp f(1, 5, 2);
    save_checkpoint(f, cfg, (dir / "ft").string());
    CHECK(load_checkpoint((dir / "ft").string())->params() == f.params());
    CHECK_THROWS(load_checkpoint((dir / "missing").string()));
    std::filesystem::remove_all(dir);
}
