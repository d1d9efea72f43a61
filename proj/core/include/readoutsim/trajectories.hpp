#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <variant>
#include <vector>

#include "readoutsim/cavity.hpp"
#include "readoutsim/model.hpp"
#include "readoutsim/rng.hpp"

namespace rsim {

enum class Intent : unsigned char { prepare_g = 0, prepare_e = 1 };

const char* to_string(Intent intent);
const char* to_string(QubitState state);

struct PreparationModel {
    double thermal_excited_population = 0.0145;
    double pi_pulse_error = 0.005;
    double pi_pulse_duration = 40e-9;

    bool operator==(const PreparationModel&) const = default;
};

void validate(const PreparationModel& prep);

/// White measurement noise referred to the chain input.
struct NoiseModel {
    double n_noise = 0.0;
    std::uint64_t seed = 0;
    bool enabled = true;

    /// Per-quadrature variance of one record sample, (2 n_noise + 1) / 4.
    double spectral_density() const { return (2.0 * n_noise + 1.0) / 4.0; }
};

/// Relaxation and thermal excitation rates (1/s) obeying detailed balance at
/// excited-state population `p_th`.
struct JumpRates {
    double down = 0.0;
    double up = 0.0;

    static JumpRates from(double t1, double p_th);
    double rate(QubitState from) const { return from == QubitState::excited ? down : up; }
};

/// Initial qubit state: thermal draw, then (for prepare_e) a pi flip that fails with
/// probability `pi_pulse_error`.
QubitState sample_preparation(Intent intent, const PreparationModel& prep, Engine& rng);

/// Alternating exponential waiting times over [0, duration).
StatePath sample_jump_path(QubitState initial, double t1, double p_th, double duration, Engine& rng);

namespace step {

/// Driven measurement window; its heterodyne record is kept.
struct Readout {
    ReadoutPulse pulse;
};

/// Undriven free evolution.
struct Idle {
    double duration = 0.0;
};

/// Qubit pi pulse, applied at its midpoint. When `conditional` it only acts on
/// prepare_e shots; prepare_g shots idle for the same time.
struct PiPulse {
    double duration = 0.0;
    bool conditional = true;
};

}  // namespace step

using SequenceStep = std::variant<step::Readout, step::Idle, step::PiPulse>;

/// Timeline of one shot. Time zero is the start of the first step.
struct MeasurementSequence {
    enum class Start { thermal, equal_superposition };

    Start start = Start::thermal;
    std::vector<SequenceStep> steps;

    double duration() const;
    std::size_t readout_count() const;
    double frame_freq() const;
};

/// [pi pulse (conditional)] -> [readout].
MeasurementSequence standard_sequence(const ReadoutPulse& pulse, const PreparationModel& prep);

struct ShotFlags {
    bool over_ncrit = false;
    bool over_saturation = false;
};

struct Shot {
    std::uint64_t index = 0;
    Intent intent = Intent::prepare_g;
    /// State drawn at t = 0 (thermal, or the projected pi/2 state).
    QubitState initial_state = QubitState::ground;
    /// Qubit history over the whole sequence, pi flips included.
    StatePath true_path;
    /// Times in true_path that were applied pi flips rather than relaxation or excitation.
    std::vector<double> control_flips;
    /// Complex record (I + iQ) of each readout step, in sqrt(photons) per sample.
    std::vector<std::vector<Complex>> records;
    std::vector<double> readout_starts;
    double max_photons = 0.0;
    ShotFlags flags;

    const std::vector<Complex>& record() const { return records.front(); }
    /// First spontaneous jump (decay or excitation), ignoring pi flips.
    std::optional<double> first_spontaneous_jump() const;
};

struct ShotContext {
    DeviceParams device;
    DerivedParams derived;
    PreparationModel prep;
    NoiseModel noise;
    AmplifierChain chain;
    std::uint64_t stream = streams::shots;
};

/// One shot of `sequence`; depends only on (noise.seed, stream, index, intent).
///
/// Each record sample is sqrt(kappa dt) alpha(t_k) plus complex Gaussian noise
/// of per-quadrature variance noise.spectral_density().
Shot generate_shot(std::uint64_t index, Intent intent, const MeasurementSequence& sequence,
                   const ShotContext& context);

/// generate_shot over standard_sequence(pulse, context.prep).
Shot generate_shot(std::uint64_t index, Intent intent, const ReadoutPulse& pulse, const ShotContext& context);

/// `index,intent,initial_state,first_jump_time` rows (empty jump time when none).
void write_shots_csv(std::ostream& out, const std::vector<Shot>& shots);

}  // namespace rsim
