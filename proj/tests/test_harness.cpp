#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "scoresmooth/harness.hpp"

using namespace scoresmooth;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "scoresmooth");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("scoresmooth_harness_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> names;
    for (const auto& e : fs::directory_iterator(dir)) names.insert(e.path().filename().string());
    return names;
}

std::set<std::string> manifest_files(const fs::path& dir) {
    const json m = json::parse(slurp(dir / "manifest.json"));
    return {m.at("files").begin(), m.at("files").end()};
}

const ExperimentKind kAllKinds[] = {ExperimentKind::ScoreEval, ExperimentKind::DenoiseCompare, ExperimentKind::Verify,
                                    ExperimentKind::Train1d,   ExperimentKind::Train2d,        ExperimentKind::Circle,
                                    ExperimentKind::Nonuniform, ExperimentKind::Sweep};

}  // namespace

TEST_CASE("config round trip for every kind") {
    for (auto kind : kAllKinds) {
        ExperimentConfig c = default_config(kind);
        c.seed = 12345;
        c.kappa = 1.1;
        c.training_set.points = {-0.5, 0.25};
        const json j = to_json(c);
        const ExperimentConfig back = config_from_json(j);
        CHECK(to_json(back) == j);
        CHECK(back.kind == kind);
        CHECK(parse_experiment_kind(to_string(kind)) == kind);
    }
}

TEST_CASE("config errors name the offending field") {
    json j = to_json(default_config(ExperimentKind::DenoiseCompare));
    json no_seed = j;
    no_seed.erase("seed");
    const auto e1 = error_of([&] { config_from_json(no_seed); });
    CHECK(e1.find("'seed'") != std::string::npos);
    CHECK(e1.find("missing required field") != std::string::npos);

    json no_layout = j;
    no_layout["training_set"].erase("layout");
    CHECK(error_of([&] { config_from_json(no_layout); }).find("'training_set.layout'") != std::string::npos);

    json bad_n = j;
    bad_n["training_set"]["n"] = "four";
    CHECK(error_of([&] { config_from_json(bad_n); }).find("'training_set.n'") != std::string::npos);

    json bad_kappa = j;
    bad_kappa["smoothing"]["kappa"] = -1.0;
    CHECK(error_of([&] { config_from_json(bad_kappa); }).find("'smoothing.kappa'") != std::string::npos);

    json bad_kind = j;
    bad_kind["kind"] = "plot";
    CHECK(error_of([&] { config_from_json(bad_kind); }).find("'kind'") != std::string::npos);
}

TEST_CASE("malformed JSON reports line and column") {
    const fs::path dir = scratch("malformed");
    fs::create_directories(dir);
    const fs::path file = dir / "bad.json";
    std::ofstream(file) << "{\n  \"kind\": \"verify-propositions\",\n  \"seed\": \n}\n";
    const auto msg = error_of([&] { load_config(file); });
    CHECK(msg.find(file.string() + ":4:") != std::string::npos);
    CHECK(msg.find("malformed JSON") != std::string::npos);
    CHECK(error_of([&] { load_config(dir / "absent.json"); }).find("absent.json") != std::string::npos);
}

TEST_CASE("config hash follows the content but not the output location") {
    ExperimentConfig a = default_config(ExperimentKind::Verify);
    ExperimentConfig b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.output_dir = "elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    b.seed = 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(hash_hex(0xabcULL) == "0000000000000abc");
}

TEST_CASE("training-set layouts") {
    ExperimentConfig c = default_config(ExperimentKind::ScoreEval);
    c.training_set.layout = "points";
    c.training_set.points = {-0.5, 0.5, 1.5};
    const auto ts = make_training_set(c);
    CHECK(ts.size() == 3);
    CHECK(ts.point(0) == -0.5);

    c = default_config(ExperimentKind::Nonuniform);
    const auto nu = make_training_set(c);
    CHECK(nu.size() == 6);
    CHECK(nu.front() >= -1.0 - c.training_set.jitter);
    const auto again = make_training_set(c);
    CHECK(std::ranges::equal(nu.points(), again.points()));

    c = default_config(ExperimentKind::Circle);
    const auto circle = make_anchor_matrix(c);
    CHECK(circle.cols() == 8);
    CHECK(circle.colwise().norm().minCoeff() == doctest::Approx(1.0));
}

TEST_CASE("output root from the environment") {
    const fs::path root = scratch("root");
    ::setenv("SCORESMOOTH_OUTPUT_ROOT", root.c_str(), 1);
    ExperimentConfig c = default_config(ExperimentKind::Verify);
    const fs::path automatic = resolve_output_dir(c);
    CHECK(automatic.parent_path() == root);
    CHECK(automatic.filename().string() == "verify-propositions-" + hash_hex(config_hash(c)).substr(0, 8));
    c.output_dir = "named";
    CHECK(resolve_output_dir(c) == root / "named");
    c.output_dir = (root / "abs").string();
    CHECK(resolve_output_dir(c) == root / "abs");

    CHECK(run_cli({"verify", "--out", "via-env"}) == 0);
    CHECK(fs::exists(root / "via-env" / "report.json"));
    ::unsetenv("SCORESMOOTH_OUTPUT_ROOT");
}

TEST_CASE("verify writes a passing report and a complete manifest") {
    const fs::path out = scratch("verify");
    CHECK(run_cli({"verify", "--config", "default", "--out", out.string()}) == 0);
    const json report = json::parse(slurp(out / "report.json"));
    CHECK(report.at("passed") == true);
    CHECK(report.at("checks").size() == 5);
    CHECK(manifest_files(out) == listing(out));
    CHECK(json::parse(slurp(out / "config.json")) == to_json(load_config(out / "config.json")));
}

TEST_CASE("denoise-compare output set and byte-identical reruns") {
    const fs::path a = scratch("dc_a"), b = scratch("dc_b");
    const std::vector<std::string> common{"denoise-compare", "--nn-steps", "0", "--samples", "4000", "--seed", "9"};
    auto with_out = [&](const fs::path& p) {
        auto args = common;
        args.insert(args.end(), {"--out", p.string()});
        return args;
    };
    REQUIRE(run_cli(with_out(a)) == 0);
    REQUIRE(run_cli(with_out(b)) == 0);
    const std::set<std::string> expected{"config.json",   "manifest.json",         "trajectories_esf.csv",
                                         "histograms.json", "trajectories_smoothed.csv", "summary.json"};
    CHECK(listing(a) == expected);
    CHECK(manifest_files(a) == expected);
    for (const auto& name : expected) {
        if (name == "config.json" || name == "manifest.json") continue;
        CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name);
    }
    std::ifstream csv(a / "trajectories_esf.csv");
    std::string header;
    std::getline(csv, header);
    const auto cfg = load_config(a / "config.json");
    CHECK(header == "# scoresmooth-csv v1 config_hash=" + hash_hex(config_hash(cfg)) + " seed=9");
    CHECK(json::parse(slurp(a / "summary.json")).at("seed") == 9);
    CHECK(json::parse(slurp(a / "manifest.json")).at("figure") == "denoising-three-score-fields");
}

TEST_CASE("exit codes") {
    const fs::path out = scratch("codes");
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"plot"}) == 2);
    CHECK(run_cli({"verify", "--bogus"}) == 2);
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"verify", "--config", (out / "missing.json").string()}) == 2);

    fs::create_directories(out);
    std::ofstream(out / "sweep.json") << to_json(default_config(ExperimentKind::Sweep)).dump();
    CHECK(run_cli({"verify", "--config", (out / "sweep.json").string()}) == 2);

    // One step from a shared initialisation cannot separate the decays, so the trend check fails.
    CHECK(run_cli({"sweep", "--steps", "1", "--hidden", "4", "--seeds", "1", "--lambdas", "1,3", "--out",
                   (out / "sweep").string()}) == 1);
    CHECK(fs::exists(out / "sweep" / "sweep.csv"));
}

TEST_CASE("circle statistics") {
    ExperimentConfig c = default_config(ExperimentKind::Circle);
    const Eigen::MatrixXd anchors = make_anchor_matrix(c);
    const auto on = circle_stats(anchors, anchors);
    CHECK(on.radius_band_fraction == 1.0);
    CHECK(on.off_anchor_angle_fraction == 0.0);
    // chord midpoints of the octagon sit at radius cos(pi/8) and half an angular step from both ends
    Eigen::MatrixXd mid(2, anchors.cols());
    for (Eigen::Index k = 0; k < anchors.cols(); ++k)
        mid.col(k) = 0.5 * (anchors.col(k) + anchors.col((k + 1) % anchors.cols()));
    CHECK(mid.col(0).norm() == doctest::Approx(std::cos(std::numbers::pi / 8)));
    const auto between = circle_stats(mid, anchors);
    CHECK(between.radius_band_fraction == 1.0);
    CHECK(between.off_anchor_angle_fraction == 1.0);
    const auto shrunk = circle_stats(0.5 * anchors, anchors);
    CHECK(shrunk.radius_band_fraction == 0.0);
}

TEST_CASE("delta grid") {
    const auto g = default_delta_grid(TrainingSet::uniform(2));
    CHECK(g.size() == 199);
    CHECK(g.front() == doctest::Approx(0.005));
    CHECK(g.back() == doctest::Approx(0.995));
    CHECK(default_delta_grid(TrainingSet::uniform(4)).back() < 1.0 / 3.0);
}
