#include "specklerc/pipeline.hpp"

namespace specklerc {

void SimPipeline::validate() const
{
    waveguide.validate();
    detection.validate(0.5 * waveguide.width_um);
    if (coupling) coupling->validate();
    if (wavelengths_nm.empty()) throw ValidationError("wavelengths_nm must be non-empty");
    for (double w : wavelengths_nm) {
        if (!(w > 0)) throw ValidationError("wavelengths_nm entries must be positive");
    }
    ModulationSignal probe;
    probe.symbols = {0.0};
    probe.symbol_period_ns = symbol_period_ns;
    probe.depth_rad = depth_rad;
    probe.sim_timestep_ns = sim_timestep_ns;
    probe.validate();
    if (threads < 1) throw ValidationError("threads must be >= 1");
}

ModulationSignal SimPipeline::modulation(std::vector<double> symbols) const
{
    ModulationSignal mod;
    mod.symbols = std::move(symbols);
    mod.symbol_period_ns = symbol_period_ns;
    mod.depth_rad = depth_rad;
    mod.sim_timestep_ns = sim_timestep_ns;
    return mod;
}

FieldRecord SimPipeline::record_for(const std::vector<double>& symbols) const
{
    return simulate_multiwavelength(waveguide, input, modulation(symbols), detection,
                                    wavelengths_nm, coupling, noise_seed, threads);
}

FeatureMatrix SimPipeline::features_for(const std::vector<double>& symbols) const
{
    return assemble_features(record_for(symbols));
}

}  // namespace specklerc
