#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "specklerc/pipeline.hpp"
#include "specklerc/tasks.hpp"

namespace specklerc {

struct TaskConfig {
    std::string source = "mackey_glass";  // "mackey_glass" | "lorenz" | series file path
    int train_len = 3000;
    int test_len = 1000;
    int max_delay = 20;
    double phase_max_rad = 3.7699111843077517;  // 1.2 * pi
    double phase_step_rad = 2.0;                // <= 0: independent draws each symbol
    std::string phase_readout = "both";          // "ridge" | "mlp" | "both"
    int surrogate_subsample = 60;
    double surrogate_transient = 500.0;
    bool memory_paper_numerator = false;  // raw second-moment numerator in m(i)
    double pulse_width_ns = 0.08;
    double footprint_mm2 = 4.8;
};

/// One JSON document driving every command. Seeds are mandatory in files
/// (no wall-clock defaults); all sub-seeds are derived from the master.
struct ExperimentConfig {
    WaveguideSpec waveguide;
    double grid_resolution_um = 0.0;  // 0 = wavelength/16
    InputField input;
    double symbol_period_ns = 0.08;
    double depth_rad = 1.5;
    double sim_timestep_ns = 0.02;
    int probes = 65;                              // used when explicit positions absent
    std::vector<double> explicit_probe_positions; // overrides `probes` when non-empty
    double spot_fwhm_um = 2.0;
    int samples_per_symbol = 4;
    double bandwidth_ghz = 0.0;
    bool ac_coupled = false;
    double noise_std = 0.02;  // detector noise, fraction of the mean intensity
    CouplingPlan coupling;  // rng_seed derived from the master seed
    std::vector<double> wavelengths_nm = {1550.0};
    RidgeOptions readout;
    MlpOptions mlp;
    TaskConfig task;
    std::uint64_t seed = 1;
    int threads = 1;

    DetectionSpec detection() const;
    SimPipeline pipeline() const;
    void validate() const;
};

ExperimentConfig default_config();

/// Parses and validates; errors carry dotted field paths. Unknown keys are
/// rejected. A config file must provide "seed".
ExperimentConfig parse_config_text(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON form; parse(serialize(c)) == c.
std::string serialize_config(const ExperimentConfig& cfg);

/// Applies one "dotted.path=value" override; the value is parsed as JSON
/// when possible, else taken as a string. Unknown paths are rejected.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

/// Hash of the canonical serialized form (minus the thread cap, which never
/// affects results), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

struct ManifestFile {
    std::string name;
    std::uint64_t bytes = 0;
    std::string checksum;  // fnv1a64 of the file contents, hex
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string tool_version;
    std::string created_utc;
    std::map<std::string, std::int64_t> counters;  // run-shape facts, e.g. feature columns
    std::vector<ManifestFile> files;
};

RunManifest make_manifest(const std::string& command, const ExperimentConfig& cfg);

/// Checksums out_dir/name and appends it to the manifest.
void manifest_add(RunManifest& manifest, const std::string& out_dir, const std::string& name);

/// Writes out_dir/manifest.json (the manifest itself is not listed).
void write_manifest(const RunManifest& manifest, const std::string& out_dir);

}  // namespace specklerc
