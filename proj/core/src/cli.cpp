#include "specklerc/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "specklerc/analysis.hpp"
#include "specklerc/config.hpp"
#include "specklerc/io.hpp"
#include "specklerc/tasks.hpp"

namespace specklerc::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    std::uint64_t seed = 0;
    int threads = 0;
    bool seed_set = false;
    bool threads_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& a)
{
    cmd->add_option("--config", a.config_path, "JSON experiment configuration");
    cmd->add_option("--out", a.out_dir, "output directory (created if missing)")
        ->capture_default_str();
    cmd->add_option("--set", a.overrides, "dotted-path override, e.g. readout.gamma=0.1");
    cmd->add_option("--seed", a.seed, "master seed override")
        ->each([&a](const std::string&) { a.seed_set = true; });
    cmd->add_option("--threads", a.threads, "worker thread cap")
        ->each([&a](const std::string&) { a.threads_set = true; });
}

ExperimentConfig resolve_config(const CommonArgs& a)
{
    ExperimentConfig cfg = a.config_path.empty() ? default_config() : load_config(a.config_path);
    for (const std::string& assignment : a.overrides) {
        apply_override(cfg, assignment);
    }
    if (a.seed_set) {
        cfg.seed = a.seed;
    }
    if (a.threads_set) {
        cfg.threads = a.threads;
    }
    cfg.validate();
    return cfg;
}

TaskDataset make_dataset(const ExperimentConfig& cfg)
{
    const TaskConfig& t = cfg.task;
    if (t.source == "mackey_glass" || t.source == "lorenz") {
        SurrogateSpec s;
        s.kind = t.source == "lorenz" ? SurrogateSpec::Kind::Lorenz
                                      : SurrogateSpec::Kind::MackeyGlass;
        // Margin covers the simulator warm-up rows dropped before the split.
        s.length = t.train_len + t.test_len + 96;
        s.subsample = t.surrogate_subsample;
        s.transient = t.surrogate_transient;
        return generate_series(s, derive_seed(cfg.seed, 1), t.train_len, t.test_len);
    }
    return load_series(t.source, t.train_len, t.test_len);
}

void write_metrics(const json& j, const fs::path& out, RunManifest& man)
{
    write_text((out / "metrics.json").string(), j.dump(2) + "\n");
    manifest_add(man, out.string(), "metrics.json");
}

void cmd_modes(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const ModeBasis basis = solve_modes(cfg.waveguide, cfg.grid_resolution_um);
    write_basis_csv(basis, (out / "modes.csv").string());
    manifest_add(man, out.string(), "modes.csv");

    json j;
    j["mode_count"] = basis.mode_count();
    j["normalized_frequency"] = cfg.waveguide.normalized_frequency();
    j["min_group_delay_ns"] = basis.min_group_delay();
    j["max_group_delay_ns"] = basis.max_group_delay();
    j["delay_spread_ns"] = basis.group_delay_spread();
    j["round_trip_ns"] = 2.0 * basis.modes.front().group_delay_ns;
    j["config_hash"] = config_hash(cfg);
    write_text((out / "modes_summary.json").string(), j.dump(2) + "\n");
    manifest_add(man, out.string(), "modes_summary.json");
    man.counters["mode_count"] = basis.mode_count();

    std::printf("modes: M=%d, delay spread %.4f ns, round trip %.4f ns\n", basis.mode_count(),
                basis.group_delay_spread(), 2.0 * basis.modes.front().group_delay_ns);
}

void cmd_run_predict(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const TaskDataset data = make_dataset(cfg);
    PredictionReport rep = run_prediction_task(data, cfg.pipeline(), cfg.readout);
    rep.model.config_hash = config_hash(cfg);
    save_readout(rep.model, (out / "model.json").string());
    manifest_add(man, out.string(), "model.json");

    const Eigen::Index n = rep.test_pred.size();
    Eigen::MatrixXd rows(n, 5);
    for (Eigen::Index i = 0; i < n; ++i) {
        rows(i, 0) = static_cast<double>(i);
        rows(i, 1) = rep.test_truth(i);
        rows(i, 2) = rep.test_pred(i);
        rows(i, 3) = data.raw_mean + data.raw_scale * rep.test_truth(i);
        rows(i, 4) = data.raw_mean + data.raw_scale * rep.test_pred(i);
    }
    write_csv((out / "predictions.csv").string(),
              {"step", "target", "predicted", "target_raw", "predicted_raw"}, rows);
    manifest_add(man, out.string(), "predictions.csv");

    json j;
    j["task"] = "predict";
    j["source"] = cfg.task.source;
    j["train_nmse"] = rep.train_nmse;
    j["test_nmse"] = rep.test_nmse;
    j["test_correlation"] = rep.test_correlation;
    j["baseline_test_nmse"] = rep.baseline_test_nmse;
    j["gamma"] = rep.model.gamma;
    j["feature_columns"] = rep.feature_columns;
    j["train_len"] = cfg.task.train_len;
    j["test_len"] = cfg.task.test_len;
    j["seed"] = cfg.seed;
    j["config_hash"] = config_hash(cfg);
    write_metrics(j, out, man);
    man.counters["feature_columns"] = rep.feature_columns;

    std::printf("predict: test NMSE %.4g (baseline %.4g), correlation %.4f\n", rep.test_nmse,
                rep.baseline_test_nmse, rep.test_correlation);
}

void cmd_run_memory(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const MemoryReport rep =
        run_memory_task(cfg.pipeline(), cfg.readout, cfg.task.max_delay, derive_seed(cfg.seed, 5),
                        cfg.task.train_len, cfg.task.test_len, cfg.task.memory_paper_numerator);

    Eigen::MatrixXd rows(rep.m.size(), 2);
    for (Eigen::Index i = 0; i < rep.m.size(); ++i) {
        rows(i, 0) = static_cast<double>(i);
        rows(i, 1) = rep.m(i);
    }
    write_csv((out / "memory.csv").string(), {"delay", "m"}, rows);
    manifest_add(man, out.string(), "memory.csv");

    json j;
    j["task"] = "memory";
    j["effective_memory"] = rep.effective_memory;
    j["m"] = std::vector<double>(rep.m.data(), rep.m.data() + rep.m.size());
    j["max_delay"] = cfg.task.max_delay;
    j["seed"] = cfg.seed;
    j["config_hash"] = config_hash(cfg);
    write_metrics(j, out, man);
    man.counters["effective_memory"] = rep.effective_memory;

    std::printf("memory: effective memory %d of %d delays probed\n", rep.effective_memory,
                cfg.task.max_delay);
}

json phase_block(const PhaseReport& r)
{
    json j;
    j["nmse"] = r.nmse;
    j["correlation"] = r.correlation;
    j["rmse_over_phimax"] = r.rmse_over_phimax;
    j["reconstruction_drift"] = r.reconstruction_drift;
    return j;
}

void cmd_run_phase(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const bool do_ridge = cfg.task.phase_readout != "mlp";
    const bool do_mlp = cfg.task.phase_readout != "ridge";
    const std::uint64_t phase_seed = derive_seed(cfg.seed, 6);
    const SimPipeline pipe = cfg.pipeline();

    std::optional<PhaseReport> ridge;
    std::optional<PhaseReport> mlp;
    if (do_ridge) {
        ridge = run_phase_task(pipe, PhaseReadout::Ridge, cfg.readout, cfg.mlp,
                               cfg.task.phase_max_rad, cfg.task.phase_step_rad, phase_seed,
                               cfg.task.train_len, cfg.task.test_len);
    }
    if (do_mlp) {
        mlp = run_phase_task(pipe, PhaseReadout::Mlp, cfg.readout, cfg.mlp,
                             cfg.task.phase_max_rad, cfg.task.phase_step_rad, phase_seed,
                             cfg.task.train_len, cfg.task.test_len);
    }

    json j;
    j["task"] = "phase";
    j["phase_max_rad"] = cfg.task.phase_max_rad;
    j["phase_step_rad"] = cfg.task.phase_step_rad;
    j["seed"] = cfg.seed;
    j["config_hash"] = config_hash(cfg);
    if (ridge) {
        j["ridge"] = phase_block(*ridge);
        ReadoutModel model = *ridge->ridge_model;
        model.config_hash = config_hash(cfg);
        save_readout(model, (out / "model_ridge.json").string());
        manifest_add(man, out.string(), "model_ridge.json");
    }
    if (mlp) {
        j["mlp"] = phase_block(*mlp);
        save_mlp(*mlp->mlp_model, (out / "model_mlp.json").string());
        manifest_add(man, out.string(), "model_mlp.json");
    }
    write_metrics(j, out, man);

    // Both runs see the same seeded phase walk, so the truth columns coincide.
    const PhaseReport& ref = ridge ? *ridge : *mlp;
    const Eigen::Index n = ref.test_truth.size();
    std::vector<std::string> cols = {"step", "delta_true", "phase_true"};
    int extra = 0;
    if (ridge) {
        cols.insert(cols.end(), {"delta_ridge", "phase_ridge"});
        extra += 2;
    }
    if (mlp) {
        cols.insert(cols.end(), {"delta_mlp", "phase_mlp"});
        extra += 2;
    }
    Eigen::MatrixXd rows(n, 3 + extra);
    for (Eigen::Index i = 0; i < n; ++i) {
        int c = 0;
        rows(i, c++) = static_cast<double>(i);
        rows(i, c++) = ref.test_truth(i);
        rows(i, c++) = ref.phase_true(i);
        if (ridge) {
            rows(i, c++) = ridge->test_pred(i);
            rows(i, c++) = ridge->phase_reconstructed(i);
        }
        if (mlp) {
            rows(i, c++) = mlp->test_pred(i);
            rows(i, c++) = mlp->phase_reconstructed(i);
        }
    }
    write_csv((out / "phase.csv").string(), cols, rows);
    manifest_add(man, out.string(), "phase.csv");

    if (ridge) {
        std::printf("phase ridge: correlation %.4f, rmse/phi_max %.4g\n", ridge->correlation,
                    ridge->rmse_over_phimax);
    }
    if (mlp) {
        std::printf("phase mlp:   correlation %.4f, rmse/phi_max %.4g\n", mlp->correlation,
                    mlp->rmse_over_phimax);
    }
}

std::string num_label(const char* prefix, double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%.4f", prefix, value);
    return buf;
}

void cmd_analyze_spatial(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const TaskDataset data = make_dataset(cfg);
    const SimPipeline pipe = cfg.pipeline();
    const std::vector<double> symbols(data.u.data(), data.u.data() + data.u.size());
    const FieldRecord rec = pipe.record_for(symbols);
    const CorrelationReport rep = spatial_correlation(rec);

    std::vector<std::string> cols;
    cols.reserve(rec.probe_positions.size());
    for (double x : rec.probe_positions) {
        cols.push_back(num_label("x", x));
    }
    write_csv((out / "spatial_matrix.csv").string(), cols, rep.matrix);
    manifest_add(man, out.string(), "spatial_matrix.csv");

    Eigen::MatrixXd curve(rep.separations.size(), 2);
    curve.col(0) = rep.separations;
    curve.col(1) = rep.mean_curve;
    write_csv((out / "spatial_curve.csv").string(), {"separation_um", "mean_abs_correlation"},
              curve);
    manifest_add(man, out.string(), "spatial_curve.csv");

    json j;
    j["status"] = rep.status;
    j["correlation_length_um"] = rep.decay_constant;
    j["fit_residual"] = rep.fit_residual;
    j["fit_points"] = rep.fit_points;
    j["excluded_probes"] = rep.excluded_probes;
    j["probes"] = static_cast<int>(rec.probe_positions.size());
    j["config_hash"] = config_hash(cfg);
    write_text((out / "spatial_fit.json").string(), j.dump(2) + "\n");
    manifest_add(man, out.string(), "spatial_fit.json");

    std::printf("spatial: correlation length %.3f um (%s, %d fit points)\n", rep.decay_constant,
                rep.status.c_str(), rep.fit_points);
}

void cmd_analyze_pulse(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const CorrelationReport rep =
        pulse_response_correlation(cfg.pipeline(), cfg.task.pulse_width_ns);

    Eigen::MatrixXd curve(rep.separations.size(), 2);
    curve.col(0) = rep.separations;
    curve.col(1) = rep.mean_curve;
    write_csv((out / "pulse_curve.csv").string(), {"lag_ns", "mean_abs_correlation"}, curve);
    manifest_add(man, out.string(), "pulse_curve.csv");

    json j;
    j["status"] = rep.status;
    j["correlation_time_ns"] = rep.decay_constant;
    j["fit_residual"] = rep.fit_residual;
    j["fit_points"] = rep.fit_points;
    j["pulse_width_ns"] = cfg.task.pulse_width_ns;
    j["config_hash"] = config_hash(cfg);
    write_text((out / "pulse_fit.json").string(), j.dump(2) + "\n");
    manifest_add(man, out.string(), "pulse_fit.json");

    std::printf("pulse: correlation time %.4f ns (%s, %d fit points)\n", rep.decay_constant,
                rep.status.c_str(), rep.fit_points);
}

void cmd_analyze_mac(const ExperimentConfig& cfg, const fs::path& out, RunManifest& man)
{
    const ModeBasis basis = solve_modes(cfg.waveguide, cfg.grid_resolution_um);
    const int probes = static_cast<int>(cfg.detection().probe_positions_um.size());
    const MacEstimate est = mac_rate(probes, basis.mode_count(), cfg.samples_per_symbol,
                                     cfg.symbol_period_ns, cfg.task.footprint_mm2);

    json j;
    j["probes"] = est.probes;
    j["modes"] = est.modes;
    j["taps"] = est.taps;
    j["symbol_period_ns"] = est.symbol_period_ns;
    j["timestep_ns"] = est.timestep_ns;
    j["mac_per_second"] = est.mac_per_second;
    j["footprint_mm2"] = est.footprint_mm2;
    j["mac_per_second_per_mm2"] = est.mac_per_second_per_mm2;
    j["config_hash"] = config_hash(cfg);
    write_text((out / "mac.json").string(), j.dump(2) + "\n");
    manifest_add(man, out.string(), "mac.json");

    std::printf("mac: %.4e MAC/s, %.4e MAC/s/mm^2\n", est.mac_per_second,
                est.mac_per_second_per_mm2);
}

using Body = std::function<void(const ExperimentConfig&, const fs::path&, RunManifest&)>;

int execute(const std::string& name, const CommonArgs& a, const Body& body)
{
    try {
        const ExperimentConfig cfg = resolve_config(a);
        const fs::path out{a.out_dir};
        fs::create_directories(out);
        RunManifest man = make_manifest(name, cfg);
        write_text((out / "config.json").string(), serialize_config(cfg));
        manifest_add(man, out.string(), "config.json");
        body(cfg, out, man);
        write_manifest(man, out.string());
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace

int run(int argc, const char* const* argv)
{
    CLI::App app{"speckle reservoir simulator and benchmark harness", "specklerc"};
    app.set_version_flag("--version", std::string(kToolVersion));
    app.require_subcommand(1);

    CommonArgs modes_a, predict_a, memory_a, phase_a, spatial_a, pulse_a, mac_a;
    std::string selected;
    const CommonArgs* selected_args = nullptr;
    Body selected_body;
    const auto select = [&](const char* name, const CommonArgs& a, Body body) {
        return [&, name, body = std::move(body)] {
            selected = name;
            selected_args = &a;
            selected_body = body;
        };
    };

    CLI::App* modes_cmd = app.add_subcommand("modes", "solve and export the mode basis");
    add_common(modes_cmd, modes_a);
    modes_cmd->callback(select("modes", modes_a, cmd_modes));

    CLI::App* run_cmd = app.add_subcommand("run", "run a benchmark task end to end");
    run_cmd->require_subcommand(1);
    CLI::App* predict_cmd = run_cmd->add_subcommand("predict", "one-step-ahead prediction");
    add_common(predict_cmd, predict_a);
    predict_cmd->callback(select("run predict", predict_a, cmd_run_predict));
    CLI::App* memory_cmd = run_cmd->add_subcommand("memory", "linear memory capacity");
    add_common(memory_cmd, memory_a);
    memory_cmd->callback(select("run memory", memory_a, cmd_run_memory));
    CLI::App* phase_cmd = run_cmd->add_subcommand("phase", "phase-variation sensing");
    add_common(phase_cmd, phase_a);
    phase_cmd->callback(select("run phase", phase_a, cmd_run_phase));

    CLI::App* analyze_cmd = app.add_subcommand("analyze", "diagnostic analyses");
    analyze_cmd->require_subcommand(1);
    CLI::App* spatial_cmd = analyze_cmd->add_subcommand("spatial", "speckle spatial correlation");
    add_common(spatial_cmd, spatial_a);
    spatial_cmd->callback(select("analyze spatial", spatial_a, cmd_analyze_spatial));
    CLI::App* pulse_cmd = analyze_cmd->add_subcommand("pulse", "pulse response correlation");
    add_common(pulse_cmd, pulse_a);
    pulse_cmd->callback(select("analyze pulse", pulse_a, cmd_analyze_pulse));
    CLI::App* mac_cmd = analyze_cmd->add_subcommand("mac", "equivalent MAC throughput");
    add_common(mac_cmd, mac_a);
    mac_cmd->callback(select("analyze mac", mac_a, cmd_analyze_mac));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!selected_body) {
        std::cerr << "error: no command selected\n";
        return 2;
    }
    return execute(selected, *selected_args, selected_body);
}

int run(const std::vector<std::string>& args)
{
    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("specklerc");
    for (const std::string& a : args) {
        argv.push_back(a.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace specklerc::cli
