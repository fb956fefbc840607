#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "specklerc/field.hpp"
#include "specklerc/modes.hpp"
#include "specklerc/readout.hpp"

namespace specklerc {

/// Everything needed to turn a symbol sequence into detected intensities
/// and feature rows: waveguide, launch spot, modulation timing, probes,
/// optional inter-modal coupling, and the carrier wavelength list.
struct SimPipeline {
    WaveguideSpec waveguide;
    InputField input;
    double symbol_period_ns = 0.08;
    double depth_rad = 1.5;
    double sim_timestep_ns = 0.02;
    DetectionSpec detection;
    std::optional<CouplingPlan> coupling;
    std::vector<double> wavelengths_nm = {1550.0};
    std::uint64_t noise_seed = 1;
    int threads = 1;

    void validate() const;
    ModulationSignal modulation(std::vector<double> symbols) const;
    FieldRecord record_for(const std::vector<double>& symbols) const;
    FeatureMatrix features_for(const std::vector<double>& symbols) const;
};

}  // namespace specklerc
