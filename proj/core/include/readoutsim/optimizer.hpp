#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "readoutsim/cavity.hpp"
#include "readoutsim/protocols.hpp"

namespace rsim {

struct GaConfig {
    std::size_t population = 24;
    std::size_t generations = 30;
    double mutation_rate = 0.2;   // per gene
    double mutation_scale = 0.15; // relative amplitude; radians for the phase
    double crossover_rate = 0.7;
    std::size_t elitism = 2;  // elitism == population freezes the population
    std::size_t segments = 8;
    std::size_t shots_per_eval = 2000;
    double constraint_max_photons = 35.0;
    /// Spread of the random initial genes around the flat pulse.
    double init_spread = 0.3;
    /// Segment amplitudes are capped at this multiple of the flat-pulse amplitude.
    double max_amplitude_factor = 3.0;
    /// Adds a drive-frequency offset gene, bounded by +/- drive_freq_span (Hz).
    bool optimize_drive_freq = false;
    double drive_freq_span = 2e6;
    /// Search the boxcar window inside each fitness evaluation. Off by default: the
    /// full measurement window is used and only phase and threshold are fitted.
    bool optimize_window = false;

    bool operator==(const GaConfig&) const = default;
};

/// Throws std::invalid_argument on an unusable configuration.
void validate(const GaConfig& config);

/// Piecewise-constant envelope relative to the flat reference pulse: segment k
/// drives at eps_flat * genes[k].
struct Genome {
    std::vector<Complex> genes;
    double freq_offset = 0.0;

    bool operator==(const Genome&) const = default;
};

struct Evaluation {
    double fitness = 0.0;
    double fidelity = 0.0;
    double max_photons = 0.0;  // noiseless max |alpha|^2 over both qubit states
    bool feasible = true;

    bool operator==(const Evaluation&) const = default;
};

/// Fitness of a genome: combined fidelity at the reference measurement time,
/// penalized by (max_photons / constraint - 1) when the photon constraint is violated.
/// Every evaluation with the same `crn_seed` shares its random numbers.
class PulseFitness {
   public:
    PulseFitness(const GaConfig& config, const ExperimentSetup& setup);

    ReadoutPulse pulse(const Genome& genome) const;
    Evaluation evaluate(const Genome& genome, std::uint64_t crn_seed, std::size_t shots) const;
    Genome flat() const;

    double flat_amplitude() const { return flat_amplitude_; }

   private:
    GaConfig config_;
    ExperimentSetup setup_;
    DerivedParams derived_;
    double flat_amplitude_;
};

struct GaResult {
    ReadoutPulse best_envelope;
    Genome best_genome;
    /// Re-evaluated at 4x shots_per_eval on fresh random numbers.
    double best_fitness = 0.0;
    double best_max_photons = 0.0;
    bool constraint_satisfied = true;
    /// Flat reference pulse under the same re-evaluation.
    double baseline_fitness = 0.0;
    std::vector<double> history_best;
    std::vector<double> history_mean;
    std::size_t evaluations = 0;
    std::size_t generations_run = 0;
    bool zero_diversity_stop = false;
    /// No feasible individual was found; the best one was scaled down onto the constraint.
    bool winner_rescaled = false;

    bool operator==(const GaResult&) const = default;
};

/// Genetic search over readout envelopes of the setup's duration. The initial
/// population contains the flat pulse of `setup`.
GaResult optimize_pulse(const GaConfig& config, const ExperimentSetup& setup, std::uint64_t seed);

/// CSV with header `generation,best_fitness,mean_fitness`.
void write_history_csv(std::ostream& out, const GaResult& result);

}  // namespace rsim
