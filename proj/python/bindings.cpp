#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "scoresmooth/denoise.hpp"
#include "scoresmooth/errors.hpp"
#include "scoresmooth/harness.hpp"
#include "scoresmooth/nnscore.hpp"
#include "scoresmooth/piecewise_linear.hpp"
#include "scoresmooth/regloss.hpp"
#include "scoresmooth/sampling.hpp"
#include "scoresmooth/score_field.hpp"
#include "scoresmooth/scorefield.hpp"

namespace py = pybind11;
using namespace scoresmooth;

namespace {

Eigen::VectorXd map1(const Eigen::VectorXd& x, const std::function<double(double)>& f) {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = f(x(i));
    return out;
}

std::unique_ptr<ScoreField> make_field(const std::string& kind, const TrainingSet& ts, double kappa) {
    if (kind == "esf") return std::make_unique<EmpiricalScoreField>(ts, 10.0);
    if (kind == "pl-esf") return std::make_unique<PiecewiseLinearScoreField>(ts);
    if (kind == "smoothed") return std::make_unique<SmoothedScoreField>(ts, SmoothingParams{kappa});
    throw py::value_error("field must be 'esf', 'pl-esf' or 'smoothed'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ParameterError>(m, "ParameterError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<TrainingSet>(m, "TrainingSet")
        .def_static("uniform", &TrainingSet::uniform, py::arg("n"), py::arg("half_width") = 1.0, py::arg("dim") = 1)
        .def_static("from_points", &TrainingSet::from_points, py::arg("points"), py::arg("dim") = 1)
        .def_property_readonly("points", [](const TrainingSet& ts) {
            return std::vector<double>(ts.points().begin(), ts.points().end());
        })
        .def_property_readonly("half_spacing", &TrainingSet::half_spacing)
        .def_property_readonly("dim", &TrainingSet::ambient_dim)
        .def("__len__", &TrainingSet::size);

    m.def("esf", [](const Eigen::VectorXd& x, double t, const TrainingSet& ts) {
        return map1(x, [&](double v) { return esf_1d(v, t, ts); });
    }, py::arg("x"), py::arg("t"), py::arg("ts"));
    m.def("pl_esf", [](const Eigen::VectorXd& x, double t, const TrainingSet& ts) {
        return map1(x, [&](double v) { return pl_esf(v, t, ts); });
    }, py::arg("x"), py::arg("t"), py::arg("ts"));
    m.def("smoothed_pl_esf", [](const Eigen::VectorXd& x, double t, double delta, const TrainingSet& ts) {
        return map1(x, [&](double v) { return smoothed_pl_esf(v, t, delta, ts); });
    }, py::arg("x"), py::arg("t"), py::arg("delta"), py::arg("ts"));
    m.def("posterior_mean", [](const Eigen::VectorXd& x, double t, const TrainingSet& ts) {
        return map1(x, [&](double v) { return posterior_mean(v, t, ts); });
    }, py::arg("x"), py::arg("t"), py::arg("ts"));

    m.def("F", &F_kappa, py::arg("kappa"));
    m.def("F_inverse", &F_inverse, py::arg("eps"));
    m.def("smoothed_nonsmoothness", &smoothed_nonsmoothness_closed_form, py::arg("t"), py::arg("delta"), py::arg("ts"));
    m.def("nonsmoothness_lower_bound", &nonsmoothness_lower_bound, py::arg("eps"), py::arg("t"), py::arg("n"));
    m.def("smoothed_loss", [](double t, double delta, const TrainingSet& ts) {
        return score_matching_loss_quad(smoothed_as_pl(t, delta, ts), t, ts);
    }, py::arg("t"), py::arg("delta"), py::arg("ts"));
    m.def("optimality_report", [](double eps, double kappa, double t, const TrainingSet& ts) {
        const auto r = optimality_report(eps, kappa, t, ts);
        return py::dict(py::arg("delta") = r.delta, py::arg("loss") = r.loss_value, py::arg("r_candidate") = r.r_candidate,
                        py::arg("r_closed_form") = r.r_closed_form, py::arg("r_lower_bound") = r.r_lower_bound,
                        py::arg("ratio") = r.ratio, py::arg("feasible") = r.feasible,
                        py::arg("near_optimal") = r.near_optimal);
    }, py::arg("eps"), py::arg("kappa"), py::arg("t"), py::arg("ts"));

    m.def("flow_map", [](const Eigen::VectorXd& x, double s, double t, double kappa, const TrainingSet& ts) {
        const SmoothingParams sp{kappa};
        return map1(x, [&](double v) { return flow_map(v, s, t, sp, ts); });
    }, py::arg("x"), py::arg("s"), py::arg("t"), py::arg("kappa"), py::arg("ts"));
    m.def("pushforward_density", [](const Eigen::VectorXd& x, double s, double t0, double kappa, const TrainingSet& ts) {
        const auto p = pushforward_density(s, t0, noised_empirical_law(t0, ts).pdf, SmoothingParams{kappa}, ts);
        return map1(x, p);
    }, py::arg("x"), py::arg("s"), py::arg("t0"), py::arg("kappa"), py::arg("ts"));
    m.def("terminal_decomposition", [](double t0, double kappa, const TrainingSet& ts) {
        const auto d = terminal_decomposition(t0, noised_empirical_law(t0, ts), SmoothingParams{kappa}, ts);
        return py::dict(py::arg("anchors") = d.anchors, py::arg("atom_weights") = d.atom_weights,
                        py::arg("smooth_mass") = d.smooth_mass);
    }, py::arg("t0"), py::arg("kappa"), py::arg("ts"));
    m.def("kl_terminal_bound", &kl_terminal_bound, py::arg("t0"), py::arg("kappa"));

    m.def("sample_noised", [](double t, const TrainingSet& ts, std::size_t count, std::uint64_t seed) {
        return sample_noised_empirical(t, ts, count, seed);
    }, py::arg("t"), py::arg("ts"), py::arg("count"), py::arg("seed"));
    m.def("denoise", [](const std::string& field, const TrainingSet& ts, const Eigen::MatrixXd& x0, double t0,
                        double t_min, std::size_t steps, double kappa, std::uint64_t seed) {
        NoiseSchedule sched;
        sched.t0 = t0;
        sched.t_min = t_min;
        sched.steps = steps;
        const auto f = make_field(field, ts, kappa);
        py::gil_scoped_release release;
        return integrate_backward(*f, sched, x0, seed).terminal;
    }, py::arg("field"), py::arg("ts"), py::arg("x0"), py::arg("t0") = 0.02, py::arg("t_min") = 1e-5,
       py::arg("steps") = 200, py::arg("kappa") = 1.2, py::arg("seed") = 0);

    py::class_<MlpScoreModel, std::shared_ptr<MlpScoreModel>>(m, "ScoreModel")
        .def_property_readonly("param_count", &MlpScoreModel::param_count)
        .def("__call__", [](const MlpScoreModel& model, const Eigen::MatrixXd& x, double t) {
            Eigen::MatrixXd out;
            model.forward(x, Eigen::RowVectorXd::Constant(x.cols(), t), out);
            return out;
        }, py::arg("x"), py::arg("t"));
    m.def("train_fixed_t", [](const TrainingSet& ts, double t, double weight_decay, std::size_t steps, std::size_t hidden,
                              double lr, std::size_t batch, std::uint64_t seed) {
        TrainConfig c;
        c.optimizer.lr = lr;
        c.optimizer.weight_decay = weight_decay;
        c.steps = steps;
        c.hidden = hidden;
        c.batch = batch;
        c.seed = seed;
        TrainResult r;
        {
            py::gil_scoped_release release;
            r = train_fixed_t(ts, t, c);
        }
        std::vector<std::pair<std::size_t, double>> curve;
        for (const auto& p : r.curve) curve.emplace_back(p.step, p.loss);
        return py::make_tuple(std::shared_ptr<MlpScoreModel>(std::move(r.model)), curve);
    }, py::arg("ts"), py::arg("t"), py::arg("weight_decay"), py::arg("steps") = 6000, py::arg("hidden") = 1024,
       py::arg("lr") = 2e-4, py::arg("batch") = 1024, py::arg("seed") = 0);
    m.def("fit_delta", [](const MlpScoreModel& model, double t, const TrainingSet& ts) {
        const auto fit = fit_delta([&](double x) {
            Eigen::VectorXd v = Eigen::VectorXd::Constant(1, x);
            return model.evaluate(v, t)(0);
        }, t, ts, default_delta_grid(ts));
        return py::dict(py::arg("best_delta") = fit.best_delta, py::arg("distance_to_esf") = fit.distance_to_esf,
                        py::arg("grid") = fit.grid, py::arg("distance") = fit.distance);
    }, py::arg("model"), py::arg("t"), py::arg("ts"));

    m.def("cli", [](std::vector<std::string> args) {
        args.insert(args.begin(), "scoresmooth");
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        return cli_main(static_cast<int>(argv.size()), argv.data());
    }, py::arg("args"));
}
