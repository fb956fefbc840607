#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <filesystem>
#include <fstream>

#include "specklerc/tasks.hpp"

using namespace specklerc;

namespace {

/// Narrow, short guide: a couple dozen modes, warm-up of a few symbols.
SimPipeline small_pipeline()
{
    SimPipeline pipe;
    pipe.waveguide.width_um = 10.0;
    pipe.waveguide.length_mm = 10.0;
    pipe.detection.probe_positions_um = DetectionSpec::uniform_probes(9, 10.0);
    return pipe;
}

std::string temp_file(const std::string& name, const std::string& content)
{
    const std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream out(path);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("nmse agrees with hand-worked examples")
{
    Eigen::VectorXd truth(3);
    truth << 0.0, 1.0, 2.0;
    Eigen::VectorXd pred(3);
    pred << 0.0, 1.0, 1.0;
    CHECK(nmse(truth, truth) == 0.0);
    CHECK(nmse(pred, truth) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(nmse(Eigen::VectorXd::Constant(3, truth.mean()), truth) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK(nmse(2.0 * pred, 2.0 * truth) == doctest::Approx(nmse(pred, truth)).epsilon(1e-12));
}

TEST_CASE("nmse rejects degenerate inputs")
{
    Eigen::VectorXd a(3), b(2);
    a << 1.0, 2.0, 3.0;
    b << 1.0, 2.0;
    CHECK_THROWS_AS(nmse(a, b), ValidationError);
    CHECK_THROWS_AS(nmse(a.head(1), b.head(1)), ValidationError);
    CHECK_THROWS_AS(nmse(a, Eigen::VectorXd::Constant(3, 4.0)), ValidationError);
}

TEST_CASE("pearson correlation hits the three reference points")
{
    Eigen::VectorXd a(4);
    a << 1.0, 2.0, 3.0, 4.0;
    CHECK(pearson_correlation(a, 2.0 * a) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pearson_correlation(a, -a) == doctest::Approx(-1.0).epsilon(1e-14));
    Eigen::VectorXd p(4), q(4);
    p << 1.0, -1.0, 1.0, -1.0;
    q << 1.0, 1.0, -1.0, -1.0;
    CHECK(pearson_correlation(p, q) == 0.0);
    CHECK(pearson_correlation(p, Eigen::VectorXd::Zero(4)) == 0.0);
}

TEST_CASE("surrogate series are seeded, normalized, and shifted into targets")
{
    SurrogateSpec spec;
    spec.length = 300;
    const TaskDataset a = generate_series(spec, 7, 100, 50);
    const TaskDataset b = generate_series(spec, 7, 100, 50);
    const TaskDataset c = generate_series(spec, 8, 100, 50);

    CHECK(a.u.size() == 300);
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.u - c.u).cwiseAbs().maxCoeff() > 0.0);
    CHECK(std::abs(a.u.mean()) < 1e-9);
    const double var = (a.u.array() - a.u.mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(a.raw_scale > 0.0);
    CHECK((a.targets - a.u.segment(1, a.u.size() - 1)).cwiseAbs().maxCoeff() == 0.0);

    SurrogateSpec lorenz = spec;
    lorenz.kind = SurrogateSpec::Kind::Lorenz;
    lorenz.subsample = 10;
    const TaskDataset d = generate_series(lorenz, 7, 100, 50);
    CHECK((a.u - d.u).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("surrogate parameters are validated")
{
    SurrogateSpec spec;
    spec.length = 100;
    CHECK_THROWS_AS(generate_series(spec, 1, 100, 50), ValidationError);
    spec.length = 300;
    spec.subsample = 0;
    CHECK_THROWS_AS(generate_series(spec, 1, 100, 50), ValidationError);
}

TEST_CASE("series files are parsed line by line and checked")
{
    std::string good;
    for (int i = 0; i < 60; ++i) good += std::to_string(0.1 * i * i) + "\n";
    const std::string path = temp_file("specklerc_series.txt", good + "\n  \n");
    const TaskDataset ds = load_series(path, 40, 10);
    CHECK(ds.u.size() == 60);
    CHECK(std::abs(ds.u.mean()) < 1e-9);
    std::filesystem::remove(path);

    CHECK_THROWS_AS(load_series("/nonexistent/series.txt"), ValidationError);

    const std::string bad1 = temp_file("specklerc_bad1.txt", "1.0\nzebra\n3.0\n");
    CHECK_THROWS_AS(load_series(bad1, 2, 1), ValidationError);
    std::filesystem::remove(bad1);

    const std::string bad2 = temp_file("specklerc_bad2.txt", "1.0\n2.0 7.0\n3.0\n");
    CHECK_THROWS_AS(load_series(bad2, 2, 1), ValidationError);
    std::filesystem::remove(bad2);

    const std::string shorty = temp_file("specklerc_short.txt", "1.0\n2.0\n3.0\n");
    CHECK_THROWS_AS(load_series(shorty, 30, 10), ValidationError);
    std::filesystem::remove(shorty);

    std::string flat;
    for (int i = 0; i < 60; ++i) flat += "5.0\n";
    const std::string constant = temp_file("specklerc_flat.txt", flat);
    CHECK_THROWS_AS(load_series(constant, 40, 10), ValidationError);
    std::filesystem::remove(constant);
}

TEST_CASE("prediction task lines up truth with the one-step-ahead target")
{
    const SimPipeline pipe = small_pipeline();
    SurrogateSpec spec;
    spec.length = 280;
    const TaskDataset data = generate_series(spec, 11, 120, 60);

    RidgeOptions ridge;
    ridge.gamma = 1e-4;
    const PredictionReport rep = run_prediction_task(data, pipe, ridge);

    CHECK(rep.feature_columns == 1 + 9 * 4);
    CHECK(rep.test_pred.size() == 60);
    CHECK(rep.test_truth.size() == 60);
    CHECK(std::isfinite(rep.train_nmse));
    CHECK(rep.test_nmse > 0.0);
    CHECK(rep.baseline_test_nmse > 0.0);

    // The reported truth must be a contiguous slice of u shifted by one.
    const std::vector<double> u(data.u.data(), data.u.data() + data.u.size());
    const FeatureMatrix fm = pipe.features_for(u);
    const int g0 = fm.first_symbol;
    CHECK((rep.test_truth - data.u.segment(g0 + 120 + 1, 60)).cwiseAbs().maxCoeff() == 0.0);

    // Even this deliberately small readout must stay clearly informative
    // (an uninformative predictor scores about 1).
    CHECK(rep.test_nmse < 0.7);
}

TEST_CASE("prediction split bounds are enforced")
{
    const SimPipeline pipe = small_pipeline();
    SurrogateSpec spec;
    spec.length = 280;
    TaskDataset data = generate_series(spec, 11, 120, 60);
    data.train_len = 250;
    CHECK_THROWS_AS(run_prediction_task(data, pipe, RidgeOptions{}), ValidationError);
}

TEST_CASE("memory capacity is bounded, seeded, and largest-delay labeled")
{
    const SimPipeline pipe = small_pipeline();
    RidgeOptions ridge;
    ridge.gamma = 1e-4;
    const MemoryReport a = run_memory_task(pipe, ridge, 3, 5, 150, 80);
    const MemoryReport b = run_memory_task(pipe, ridge, 3, 5, 150, 80);

    CHECK(a.m.size() == 4);
    CHECK(a.m.minCoeff() >= 0.0);
    CHECK(a.m.maxCoeff() <= 1.0);
    CHECK((a.m - b.m).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.input_seed == 5);

    int expected = -1;
    for (int i = 0; i < a.m.size(); ++i) {
        if (a.m(i) > 0.5) expected = i;
    }
    CHECK(a.effective_memory == expected);

    const MemoryReport paper = run_memory_task(pipe, ridge, 3, 5, 150, 80, true);
    CHECK(paper.m.allFinite());
    CHECK(paper.m.minCoeff() >= 0.0);

    CHECK_THROWS_AS(run_memory_task(pipe, ridge, 0, 5, 150, 80), ValidationError);
}

TEST_CASE("phase task reports a self-consistent reconstruction")
{
    const SimPipeline pipe = small_pipeline();
    RidgeOptions ridge;
    ridge.gamma = 1e-4;
    const double phase_max = 2.0;
    const PhaseReport rep = run_phase_task(pipe, PhaseReadout::Ridge, ridge, MlpOptions{},
                                           phase_max, 0.8, 3, 100, 50);

    CHECK_FALSE(rep.used_mlp);
    CHECK(rep.ridge_model.has_value());
    CHECK_FALSE(rep.mlp_model.has_value());
    CHECK(rep.phase_true.minCoeff() >= 0.0);
    CHECK(rep.phase_true.maxCoeff() <= phase_max);
    CHECK(rep.test_truth.cwiseAbs().maxCoeff() <= 2.0 * 0.8 + 1e-12);

    // True increments are the differences of the true phase trace.
    for (int n = 1; n < rep.phase_true.size(); ++n) {
        CHECK(rep.test_truth(n) ==
              doctest::Approx(rep.phase_true(n) - rep.phase_true(n - 1)).epsilon(1e-12));
    }
    // The reconstruction integrates the predicted increments.
    for (int n = 1; n < rep.phase_reconstructed.size(); ++n) {
        CHECK(rep.phase_reconstructed(n) ==
              doctest::Approx(rep.phase_reconstructed(n - 1) + rep.test_pred(n)).epsilon(1e-12));
    }
    CHECK(rep.reconstruction_drift ==
          doctest::Approx(std::abs(rep.phase_reconstructed(49) - rep.phase_true(49))).epsilon(1e-12));
    CHECK(rep.rmse_over_phimax ==
          doctest::Approx(std::sqrt((rep.test_pred - rep.test_truth).squaredNorm() / 50.0) /
                          phase_max).epsilon(1e-12));

    // A walk with small steps is an easy target for the linear readout.
    CHECK(rep.correlation > 0.5);
}

TEST_CASE("independent phase draws and their bound are honored")
{
    const SimPipeline pipe = small_pipeline();
    RidgeOptions ridge;
    ridge.gamma = 1e-4;
    const PhaseReport rep = run_phase_task(pipe, PhaseReadout::Ridge, ridge, MlpOptions{},
                                           1.5, 0.0, 4, 100, 50);
    CHECK(rep.phase_true.minCoeff() >= 0.0);
    CHECK(rep.phase_true.maxCoeff() <= 1.5);
    CHECK(std::isfinite(rep.nmse));

    CHECK_THROWS_AS(run_phase_task(pipe, PhaseReadout::Ridge, ridge, MlpOptions{}, 0.0, 0.5,
                                   4, 100, 50),
                    ValidationError);
}

TEST_CASE("phase task can swap in the mlp readout")
{
    const SimPipeline pipe = small_pipeline();
    MlpOptions mlp;
    mlp.hidden = 10;
    mlp.lbfgs.max_iterations = 60;
    const PhaseReport rep = run_phase_task(pipe, PhaseReadout::Mlp, RidgeOptions{}, mlp,
                                           2.0, 0.8, 3, 100, 50);
    CHECK(rep.used_mlp);
    CHECK(rep.mlp_model.has_value());
    CHECK_FALSE(rep.ridge_model.has_value());
    CHECK(std::isfinite(rep.nmse));
    CHECK(rep.test_pred.size() == 50);
}
