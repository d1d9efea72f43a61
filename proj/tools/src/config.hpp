#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "readoutsim/optimizer.hpp"
#include "readoutsim/protocols.hpp"

namespace rsim::cli {

/// Malformed, incomplete or inconsistent configuration (exit status 2).
class ConfigError : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

enum class Protocol { fidelity, qnd, postselect, rb, optimize, sweep };

const char* to_string(Protocol p);
std::optional<Protocol> parse_protocol(const std::string& name);

struct ReadoutConfig {
    double drive_freq = 0.0;
    /// Exactly one of n_bar and envelope is set.
    std::optional<double> n_bar;
    std::vector<Complex> envelope;  // piecewise-constant segments over t_meas, sqrt(photons)/s
    double t_meas = 0.0;
    double sample_dt = kDefaultSampleDt;
    FilterSpec filter;
    bool optimize_window = true;
    bool optimize_phase = true;
    double window_grid = 5e-9;
    std::size_t histogram_bins = 200;
};

struct RbConfig {
    double gate_error = 0.0;
    std::vector<std::size_t> sequence_lengths;
    std::size_t sequences = 0;
    std::size_t shots_per_sequence = 0;
};

struct RunConfig {
    std::optional<Protocol> protocol;
    std::uint64_t seed = 0;
    std::size_t shots = 0;
    std::filesystem::path output_dir;
    DeviceParams device;
    std::string chain_profile;
    std::map<std::string, AmplifierChain> chains;
    PreparationModel prep;
    ReadoutConfig readout;
    std::optional<std::vector<double>> qnd_delays;
    std::optional<PostSelectionTiming> postselect;
    std::optional<RbConfig> rb;
    GaConfig ga;

    const AmplifierChain& chain() const { return chains.at(chain_profile); }
};

/// Parses the YAML run configuration. Unknown keys, missing keys and values
/// outside their domain raise ConfigError naming the dotted key path.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError when a section needed by `protocol` is absent, or when the
/// file names a different protocol.
void require_protocol(const RunConfig& config, Protocol protocol);

/// Readout pulse described by the readout block.
ReadoutPulse make_pulse(const RunConfig& config);
ExperimentSetup make_setup(const RunConfig& config, unsigned threads);

/// Complete configuration with the measured device, both amplifier chains and every protocol block.
std::string paper_defaults();

}  // namespace rsim::cli
