#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "specklerc/field.hpp"
#include "specklerc/lbfgs.hpp"
#include "specklerc/mlp.hpp"
#include "specklerc/modes.hpp"
#include "specklerc/pipeline.hpp"
#include "specklerc/readout.hpp"

namespace {

using namespace specklerc;

void bm_solve_modes(benchmark::State& state)
{
    WaveguideSpec spec;
    for (auto _ : state) {
        ModeBasis basis = solve_modes(spec);
        benchmark::DoNotOptimize(basis.modes.back().beta);
    }
}
BENCHMARK(bm_solve_modes)->Unit(benchmark::kMillisecond);

SimPipeline bench_pipeline()
{
    SimPipeline pipe;
    pipe.detection = DetectionSpec{};
    pipe.detection.probe_positions_um = DetectionSpec::uniform_probes(65, pipe.waveguide.width_um);
    return pipe;
}

void bm_field_symbols(benchmark::State& state)
{
    const int symbols = static_cast<int>(state.range(0));
    SimPipeline pipe = bench_pipeline();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> u(symbols);
    for (double& s : u) {
        s = uni(rng);
    }
    for (auto _ : state) {
        FieldRecord rec = pipe.record_for(u);
        benchmark::DoNotOptimize(rec.blocks.front()(0, 0));
    }
    state.SetItemsProcessed(state.iterations() * symbols);
}
BENCHMARK(bm_field_symbols)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void bm_ridge_train(benchmark::State& state)
{
    const int rows = 2000;
    const int cols = static_cast<int>(state.range(0));
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd y(rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            x(r, c) = c == 0 ? 1.0 : normal(rng);
        }
        y(r) = normal(rng);
    }
    RidgeOptions opts;
    opts.gamma = 1e-4;
    for (auto _ : state) {
        ReadoutModel model = train_ridge(x, y, opts);
        benchmark::DoNotOptimize(model.weights(0));
    }
}
BENCHMARK(bm_ridge_train)->Arg(261)->Arg(1301)->Unit(benchmark::kMillisecond);

void bm_mlp_loss_grad(benchmark::State& state)
{
    const int rows = 1000;
    const int inputs = 260;
    const int hidden = 150;
    std::mt19937_64 rng(13);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(rows, inputs);
    Eigen::VectorXd y(rows);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < inputs; ++c) {
            x(r, c) = normal(rng);
        }
        y(r) = normal(rng);
    }
    Eigen::VectorXd params(hidden * inputs + hidden + hidden + 1);
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        params(i) = 0.01 * normal(rng);
    }
    Eigen::VectorXd grad(params.size());
    for (auto _ : state) {
        double loss = mlp_loss(params, hidden, x, y, 1e-4, &grad);
        benchmark::DoNotOptimize(loss);
        benchmark::DoNotOptimize(grad(0));
    }
}
BENCHMARK(bm_mlp_loss_grad)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
