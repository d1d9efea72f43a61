#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "readoutsim/cavity.hpp"
#include "readoutsim/discrimination.hpp"
#include "readoutsim/model.hpp"
#include "readoutsim/trajectories.hpp"

namespace rsim {

/// Everything a protocol needs to generate and score shots.
struct ExperimentSetup {
    DeviceParams device;
    AmplifierChain chain;
    PreparationModel prep;
    ReadoutPulse pulse;
    /// Starting filter. With `optimize_window` the boxcar window is searched on a
    /// calibration batch; with `optimize_phase` the demodulation phase is fitted.
    FilterSpec filter;
    bool optimize_window = true;
    bool optimize_phase = true;
    double window_grid = 5e-9;
    bool noise_enabled = true;
    std::size_t histogram_bins = 200;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    ShotContext shot_context(std::uint64_t stream) const;
};

/// Rectangular readout at `drive_freq` whose steady-state (n_g + n_e) / 2 equals `n_bar`.
ReadoutPulse make_readout_pulse(const DeviceParams& device, double drive_freq, double n_bar, double duration,
                                double sample_dt = kDefaultSampleDt);

/// The measured device with the SLUG chain: n_bar = 24 at 8.0762 GHz, 200 ns boxcar.
ExperimentSetup reference_setup(std::uint64_t seed = 0);

/// A filter plus decision rule fitted on labelled calibration shots.
struct CalibratedReadout {
    FilterSpec filter;
    ThresholdFit threshold;
    double calibration_fidelity = 0.0;

    bool operator==(const CalibratedReadout&) const = default;
};

/// Fits phase, window (5 ns grid by default) and threshold on `n_shots` labelled
/// shots of the standard prepare-and-measure sequence for `pulse`.
CalibratedReadout calibrate_readout(const ExperimentSetup& setup, const ReadoutPulse& pulse, std::size_t n_shots);

struct PhysicsFlags {
    std::size_t shots_over_ncrit = 0;
    std::size_t shots_over_saturation = 0;
    double max_photons = 0.0;

    bool any() const { return shots_over_ncrit > 0 || shots_over_saturation > 0; }
    void merge(const ShotFlags& f, double photons);

    bool operator==(const PhysicsFlags&) const = default;
};

struct FidelityResult {
    DiscriminationReport report;
    Histogram histogram;
    CalibratedReadout readout;
    PhysicsFlags flags;
    std::vector<double> scores_g;
    std::vector<double> scores_e;

    bool operator==(const FidelityResult&) const = default;
};

/// Combined preparation and readout fidelity from n_shots / 2 shots per intent,
/// scored with a readout calibrated on a separate batch of the same size.
FidelityResult run_fidelity(const ExperimentSetup& setup, std::size_t n_shots);

/// Exponential model y = amplitude * exp(-x / decay_time) + offset.
struct ExponentialFit {
    double amplitude = 0.0;
    double decay_time = 0.0;
    double offset = 0.0;
    double residual_norm = 0.0;
    /// The decay time hit a search bound (data not decaying on the sampled scale).
    bool pinned = false;

    double operator()(double x) const;

    bool operator==(const ExponentialFit&) const = default;
};

/// Least squares over decay_time (bounded log-scale search) with (amplitude, offset)
/// solved linearly at each trial. Needs >= 4 points with ascending x.
ExponentialFit fit_exponential(std::span<const double> x, std::span<const double> y);

struct QndResult {
    std::vector<double> delays;
    std::vector<double> p_gg;
    std::vector<double> p_ee;
    /// Same conditioning on the first outcome, but counting the true qubit state
    /// at the centre of the second window (readout error removed).
    std::vector<double> p_gg_state;
    std::vector<double> p_ee_state;
    std::vector<std::size_t> conditioned_g;
    std::vector<std::size_t> conditioned_e;
    ExponentialFit fit_gg;
    ExponentialFit fit_ee;
    bool fits_valid = false;
    bool low_statistics = false;  // some delay had < 100 conditioning events
    PhysicsFlags flags;

    bool operator==(const QndResult&) const = default;
};

/// Two back-to-back measurements after a pi/2 pulse, separated by each delay
/// (end of the first pulse to start of the second).
QndResult run_qnd(const ExperimentSetup& setup, std::span<const double> delays, std::size_t n_shots);

struct PostSelectionTiming {
    double pre_measurement = 320e-9;
    double depletion_wait = 300e-9;

    bool operator==(const PostSelectionTiming&) const = default;
};

struct PostSelectionResult {
    DiscriminationReport raw;
    DiscriminationReport selected;
    double discard_fraction = 0.0;
    bool excessive_discard = false;  // discard_fraction > 0.5
    Histogram raw_histogram;
    Histogram selected_histogram;
    CalibratedReadout main_readout;
    CalibratedReadout pre_readout;
    PhysicsFlags flags;

    bool operator==(const PostSelectionResult&) const = default;
};

/// Pre-measurement, cavity depletion wait, then the standard prepare-and-measure
/// sequence; shots whose pre-measurement reads |e> are discarded.
PostSelectionResult run_postselection(const ExperimentSetup& setup, std::size_t n_shots,
                                      const PostSelectionTiming& timing = {});

struct RbResult {
    std::vector<std::size_t> sequence_lengths;
    std::vector<double> survival;
    double fitted_error_per_gate = 0.0;
    double fit_amplitude = 0.0;  // A
    double fit_decay = 1.0;      // p
    double fit_offset = 0.0;     // B
    bool fit_failed = false;

    bool operator==(const RbResult&) const = default;
};

/// Single-qubit randomized benchmarking with a depolarizing channel of average
/// gate error `gate_error` after every random Clifford. Survival A p^m + B is
/// fitted and the error per gate reported as (1 - p) / 2.
RbResult run_rb(double gate_error, std::span<const std::size_t> sequence_lengths, std::size_t n_sequences,
                std::size_t shots_per_sequence, std::uint64_t seed, unsigned threads = 0);

/// Thermal population making the simulated raw error_g hit `target_error_g`.
struct ThermalCalibration {
    double thermal_excited_population = 0.0;
    double error_g = 0.0;
    int iterations = 0;
    bool converged = false;

    bool operator==(const ThermalCalibration&) const = default;
};

ThermalCalibration calibrate_thermal_population(const ExperimentSetup& setup, double target_error_g,
                                                std::size_t n_shots, double tolerance = 5e-4);

}  // namespace rsim
