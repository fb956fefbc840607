#include "specklerc/config.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <initializer_list>

#include <json.hpp>

#include "specklerc/io.hpp"

namespace specklerc {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& prefix,
                std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) throw ValidationError("config section must be an object: " + prefix);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw ValidationError("unknown config field: " + prefix + it.key());
    }
}

template <typename T>
void read_field(const json& obj, const std::string& prefix, const char* key, T& out)
{
    if (!obj.contains(key)) return;
    try {
        obj.at(key).get_to(out);
    } catch (const json::exception&) {
        throw ValidationError("config field has the wrong type: " + prefix + key);
    }
}

json to_json(const ExperimentConfig& c)
{
    json j;
    j["waveguide"] = {{"width_um", c.waveguide.width_um},
                      {"length_mm", c.waveguide.length_mm},
                      {"n_core", c.waveguide.n_core},
                      {"n_clad", c.waveguide.n_clad},
                      {"wavelength_nm", c.waveguide.wavelength_nm},
                      {"grid_resolution_um", c.grid_resolution_um}};
    j["input"] = {{"spot_width_um", c.input.spot_width_um},
                  {"center_offset_um", c.input.center_offset_um}};
    j["modulation"] = {{"symbol_period_ns", c.symbol_period_ns},
                       {"depth_rad", c.depth_rad},
                       {"sim_timestep_ns", c.sim_timestep_ns}};
    j["detection"] = {{"probes", c.probes},
                      {"probe_positions_um", c.explicit_probe_positions},
                      {"spot_fwhm_um", c.spot_fwhm_um},
                      {"samples_per_symbol", c.samples_per_symbol},
                      {"bandwidth_ghz", c.bandwidth_ghz},
                      {"ac_coupled", c.ac_coupled},
                      {"noise_std", c.noise_std}};
    j["coupling"] = {{"segments", c.coupling.segments},
                     {"strength", c.coupling.strength},
                     {"bandwidth", c.coupling.bandwidth}};
    j["wavelengths_nm"] = c.wavelengths_nm;
    j["readout"] = {{"gamma", c.readout.gamma},
                    {"standardize", c.readout.standardize},
                    {"validation_fraction", c.readout.validation_fraction},
                    {"gamma_grid", c.readout.gamma_grid}};
    j["mlp"] = {{"hidden", c.mlp.hidden},
                {"l2", c.mlp.l2},
                {"max_iterations", c.mlp.lbfgs.max_iterations},
                {"memory", c.mlp.lbfgs.memory},
                {"grad_tolerance", c.mlp.lbfgs.grad_tolerance}};
    j["task"] = {{"source", c.task.source},
                 {"train_len", c.task.train_len},
                 {"test_len", c.task.test_len},
                 {"max_delay", c.task.max_delay},
                 {"phase_max_rad", c.task.phase_max_rad},
                 {"phase_step_rad", c.task.phase_step_rad},
                 {"phase_readout", c.task.phase_readout},
                 {"surrogate_subsample", c.task.surrogate_subsample},
                 {"surrogate_transient", c.task.surrogate_transient},
                 {"memory_paper_numerator", c.task.memory_paper_numerator},
                 {"pulse_width_ns", c.task.pulse_width_ns},
                 {"footprint_mm2", c.task.footprint_mm2}};
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

ExperimentConfig from_json(const json& j, bool require_seed)
{
    check_keys(j, "", {"waveguide", "input", "modulation", "detection", "coupling",
                       "wavelengths_nm", "readout", "mlp", "task", "seed", "threads"});
    ExperimentConfig c;

    if (j.contains("waveguide")) {
        const json& w = j.at("waveguide");
        check_keys(w, "waveguide.", {"width_um", "length_mm", "n_core", "n_clad",
                                     "wavelength_nm", "grid_resolution_um"});
        read_field(w, "waveguide.", "width_um", c.waveguide.width_um);
        read_field(w, "waveguide.", "length_mm", c.waveguide.length_mm);
        read_field(w, "waveguide.", "n_core", c.waveguide.n_core);
        read_field(w, "waveguide.", "n_clad", c.waveguide.n_clad);
        read_field(w, "waveguide.", "wavelength_nm", c.waveguide.wavelength_nm);
        read_field(w, "waveguide.", "grid_resolution_um", c.grid_resolution_um);
    }
    if (j.contains("input")) {
        const json& s = j.at("input");
        check_keys(s, "input.", {"spot_width_um", "center_offset_um"});
        read_field(s, "input.", "spot_width_um", c.input.spot_width_um);
        read_field(s, "input.", "center_offset_um", c.input.center_offset_um);
    }
    if (j.contains("modulation")) {
        const json& m = j.at("modulation");
        check_keys(m, "modulation.", {"symbol_period_ns", "depth_rad", "sim_timestep_ns"});
        read_field(m, "modulation.", "symbol_period_ns", c.symbol_period_ns);
        read_field(m, "modulation.", "depth_rad", c.depth_rad);
        read_field(m, "modulation.", "sim_timestep_ns", c.sim_timestep_ns);
    }
    if (j.contains("detection")) {
        const json& d = j.at("detection");
        check_keys(d, "detection.", {"probes", "probe_positions_um", "spot_fwhm_um",
                                     "samples_per_symbol", "bandwidth_ghz", "ac_coupled",
                                     "noise_std"});
        read_field(d, "detection.", "probes", c.probes);
        read_field(d, "detection.", "probe_positions_um", c.explicit_probe_positions);
        read_field(d, "detection.", "spot_fwhm_um", c.spot_fwhm_um);
        read_field(d, "detection.", "samples_per_symbol", c.samples_per_symbol);
        read_field(d, "detection.", "bandwidth_ghz", c.bandwidth_ghz);
        read_field(d, "detection.", "ac_coupled", c.ac_coupled);
        read_field(d, "detection.", "noise_std", c.noise_std);
    }
    if (j.contains("coupling")) {
        const json& p = j.at("coupling");
        check_keys(p, "coupling.", {"segments", "strength", "bandwidth"});
        read_field(p, "coupling.", "segments", c.coupling.segments);
        read_field(p, "coupling.", "strength", c.coupling.strength);
        read_field(p, "coupling.", "bandwidth", c.coupling.bandwidth);
    }
    read_field(j, "", "wavelengths_nm", c.wavelengths_nm);
    if (j.contains("readout")) {
        const json& r = j.at("readout");
        check_keys(r, "readout.", {"gamma", "standardize", "validation_fraction", "gamma_grid"});
        read_field(r, "readout.", "gamma", c.readout.gamma);
        read_field(r, "readout.", "standardize", c.readout.standardize);
        read_field(r, "readout.", "validation_fraction", c.readout.validation_fraction);
        read_field(r, "readout.", "gamma_grid", c.readout.gamma_grid);
    }
    if (j.contains("mlp")) {
        const json& m = j.at("mlp");
        check_keys(m, "mlp.", {"hidden", "l2", "max_iterations", "memory", "grad_tolerance"});
        read_field(m, "mlp.", "hidden", c.mlp.hidden);
        read_field(m, "mlp.", "l2", c.mlp.l2);
        read_field(m, "mlp.", "max_iterations", c.mlp.lbfgs.max_iterations);
        read_field(m, "mlp.", "memory", c.mlp.lbfgs.memory);
        read_field(m, "mlp.", "grad_tolerance", c.mlp.lbfgs.grad_tolerance);
    }
    if (j.contains("task")) {
        const json& t = j.at("task");
        check_keys(t, "task.", {"source", "train_len", "test_len", "max_delay", "phase_max_rad",
                                "phase_step_rad", "phase_readout", "surrogate_subsample",
                                "surrogate_transient", "memory_paper_numerator", "pulse_width_ns",
                                "footprint_mm2"});
        read_field(t, "task.", "source", c.task.source);
        read_field(t, "task.", "train_len", c.task.train_len);
        read_field(t, "task.", "test_len", c.task.test_len);
        read_field(t, "task.", "max_delay", c.task.max_delay);
        read_field(t, "task.", "phase_max_rad", c.task.phase_max_rad);
        read_field(t, "task.", "phase_step_rad", c.task.phase_step_rad);
        read_field(t, "task.", "phase_readout", c.task.phase_readout);
        read_field(t, "task.", "surrogate_subsample", c.task.surrogate_subsample);
        read_field(t, "task.", "surrogate_transient", c.task.surrogate_transient);
        read_field(t, "task.", "memory_paper_numerator", c.task.memory_paper_numerator);
        read_field(t, "task.", "pulse_width_ns", c.task.pulse_width_ns);
        read_field(t, "task.", "footprint_mm2", c.task.footprint_mm2);
    }
    if (require_seed && !j.contains("seed")) {
        throw ValidationError("config field is mandatory: seed");
    }
    read_field(j, "", "seed", c.seed);
    read_field(j, "", "threads", c.threads);
    c.validate();
    return c;
}

}  // namespace

DetectionSpec ExperimentConfig::detection() const
{
    DetectionSpec det;
    if (!explicit_probe_positions.empty()) {
        det.probe_positions_um = Eigen::Map<const Eigen::VectorXd>(
            explicit_probe_positions.data(),
            static_cast<Eigen::Index>(explicit_probe_positions.size()));
    } else {
        if (probes < 1) throw ValidationError("detection.probes must be >= 1");
        det.probe_positions_um = DetectionSpec::uniform_probes(probes, waveguide.width_um);
    }
    det.spot_fwhm_um = spot_fwhm_um;
    det.samples_per_symbol = samples_per_symbol;
    det.bandwidth_ghz = bandwidth_ghz;
    det.ac_coupled = ac_coupled;
    det.noise_std = noise_std;
    return det;
}

SimPipeline ExperimentConfig::pipeline() const
{
    SimPipeline p;
    p.waveguide = waveguide;
    p.input = input;
    p.symbol_period_ns = symbol_period_ns;
    p.depth_rad = depth_rad;
    p.sim_timestep_ns = sim_timestep_ns;
    p.detection = detection();
    if (coupling.segments > 1 || coupling.strength > 0) {
        CouplingPlan plan = coupling;
        plan.rng_seed = derive_seed(seed, 3);
        p.coupling = plan;
    }
    p.wavelengths_nm = wavelengths_nm;
    p.noise_seed = derive_seed(seed, 2);
    p.threads = threads;
    return p;
}

void ExperimentConfig::validate() const
{
    pipeline().validate();
    if (grid_resolution_um < 0) throw ValidationError("waveguide.grid_resolution_um must be >= 0");
    if (grid_resolution_um > 0 && grid_resolution_um > waveguide.wavelength_um() / 8.0) {
        throw ValidationError("waveguide.grid_resolution_um must be <= wavelength/8");
    }
    if (task.train_len < 2) throw ValidationError("task.train_len must be >= 2");
    if (task.test_len < 2) throw ValidationError("task.test_len must be >= 2");
    if (task.max_delay < 1) throw ValidationError("task.max_delay must be >= 1");
    if (!(task.phase_max_rad > 0)) throw ValidationError("task.phase_max_rad must be positive");
    if (task.phase_readout != "ridge" && task.phase_readout != "mlp" &&
        task.phase_readout != "both") {
        throw ValidationError("task.phase_readout must be one of ridge|mlp|both");
    }
    if (task.source.empty()) throw ValidationError("task.source must be non-empty");
    if (task.surrogate_subsample < 1) throw ValidationError("task.surrogate_subsample must be >= 1");
    if (!(task.surrogate_transient >= 0)) throw ValidationError("task.surrogate_transient must be >= 0");
    if (!(task.pulse_width_ns > 0)) throw ValidationError("task.pulse_width_ns must be positive");
    if (!(task.footprint_mm2 > 0)) throw ValidationError("task.footprint_mm2 must be positive");
    if (!(readout.validation_fraction > 0) || !(readout.validation_fraction < 1)) {
        throw ValidationError("readout.validation_fraction must lie in (0, 1)");
    }
    if (mlp.hidden < 1) throw ValidationError("mlp.hidden must be >= 1");
    if (mlp.l2 < 0) throw ValidationError("mlp.l2 must be >= 0");
    if (mlp.lbfgs.max_iterations < 1) throw ValidationError("mlp.max_iterations must be >= 1");
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

ExperimentConfig default_config()
{
    return ExperimentConfig{};
}

ExperimentConfig parse_config_text(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return from_json(j, true);
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

std::string serialize_config(const ExperimentConfig& cfg)
{
    return to_json(cfg).dump(2) + "\n";
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ValidationError("override must look like path.to.field=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);

    json root = to_json(cfg);
    json* node = &root;
    std::size_t start = 0;
    std::string walked;
    while (true) {
        const auto dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (key.empty()) throw ValidationError("override path has an empty segment: " + path);
        if (!node->is_object() || !node->contains(key)) {
            throw ValidationError("unknown config field: " + walked + key);
        }
        walked += key;
        if (dot == std::string::npos) {
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::exception&) {
                parsed = value;  // bare strings (e.g. file paths) pass through
            }
            (*node)[key] = parsed;
            break;
        }
        node = &(*node)[key];
        walked += '.';
        start = dot + 1;
    }
    cfg = from_json(root, true);
}

std::string config_hash(const ExperimentConfig& cfg)
{
    // The thread cap changes scheduling, never results; keep it out of the
    // hash so reruns at different widths label their outputs identically.
    json j = to_json(cfg);
    j.erase("threads");
    return hex64(fnv1a64(j.dump()));
}

RunManifest make_manifest(const std::string& command, const ExperimentConfig& cfg)
{
    RunManifest m;
    m.command = command;
    m.config_hash = config_hash(cfg);
    m.tool_version = kToolVersion;
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    m.created_utc = buf;
    return m;
}

void manifest_add(RunManifest& manifest, const std::string& out_dir, const std::string& name)
{
    const std::filesystem::path p = std::filesystem::path(out_dir) / name;
    ManifestFile f;
    f.name = name;
    f.bytes = static_cast<std::uint64_t>(std::filesystem::file_size(p));
    f.checksum = hex64(fnv1a64_file(p.string()));
    manifest.files.push_back(std::move(f));
}

void write_manifest(const RunManifest& manifest, const std::string& out_dir)
{
    json j;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["tool_version"] = manifest.tool_version;
    j["created_utc"] = manifest.created_utc;
    if (!manifest.counters.empty()) {
        j["counters"] = manifest.counters;
    }
    j["files"] = json::array();
    for (const ManifestFile& f : manifest.files) {
        j["files"].push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a64", f.checksum}});
    }
    write_text((std::filesystem::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

}  // namespace specklerc
