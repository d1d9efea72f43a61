#pragma once

#include <optional>

namespace rsim {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kBoltzmann = 1.380649e-23;    // J/K
inline constexpr double kPlanckReduced = 1.054571817e-34;  // J s

/// Converts an ordinary frequency in Hz to an angular rate in rad/s.
///
/// Every parameter struct stores ordinary frequencies (the values quoted as
/// "omega/2pi" in the lab). Dynamics code calls this exactly once when it
/// builds its rate constants.
constexpr double angular(double hz) { return kTwoPi * hz; }

enum class QubitState : unsigned char { ground = 0, excited = 1 };

constexpr QubitState flipped(QubitState s) {
    return s == QubitState::ground ? QubitState::excited : QubitState::ground;
}

/// Qubit, cavity and coupling constants. Frequencies in Hz, times in seconds.
struct DeviceParams {
    double cavity_freq = 0.0;
    double cavity_linewidth_kappa = 0.0;
    double qubit_freq = 0.0;
    double anharmonicity = 0.0;
    double coupling_g = 0.0;
    double t1 = 0.0;
    double t2_star = 0.0;
    /// Replaces the two-level g^2/Delta half-shift (e.g. with a transmon-corrected value). Signed, Hz.
    std::optional<double> chi_override;
    /// When true the cavity sits at cavity_freq + |chi| with the qubit in |g>.
    bool ground_shift_positive = true;

    bool operator==(const DeviceParams&) const = default;
};

/// Throws std::invalid_argument naming the first violated constraint.
void validate(const DeviceParams& device);

struct DerivedParams {
    double detuning_delta = 0.0;  // qubit_freq - cavity_freq, Hz, signed
    double chi = 0.0;             // dispersive half-shift, Hz, signed
    double n_crit = 0.0;

    /// Cavity resonance offset from cavity_freq (Hz) for the given qubit state.
    double cavity_shift(QubitState state, bool ground_shift_positive) const;
};

/// Minimum |Delta|/g accepted as dispersive.
inline constexpr double kMinDispersiveRatio = 10.0;

DerivedParams derive_params(const DeviceParams& device);

struct AmplifierChain {
    double noise_photons = 0.0;
    double power_gain_db = 0.0;
    /// Largest tolerable intracavity-equivalent photon number.
    double saturation_photons = 1.0;

    bool operator==(const AmplifierChain&) const = default;
};

void validate(const AmplifierChain& chain);

/// Rayleigh-Jeans estimate k_B T / (hbar * 2 pi f). No vacuum half-quantum.
double noise_photons_from_temperature(double temperature_kelvin, double reference_freq_hz);

/// 2 sin(theta) sqrt(n kappa tau / (2 n_noise + 1)).
///
/// `kappa_hz` is an ordinary linewidth; it is multiplied by 2 pi before use.
double snr_theoretical(double n_bar, double kappa_hz, double tau_s, double n_noise, double sin_theta_bar);

/// Power-SNR advantage (dB) of a chain with `n_noise_a` added photons over one with `n_noise_b`.
double snr_improvement_db(double n_noise_a, double n_noise_b);

/// Device constants of the SLUG-readout transmon experiment.
DeviceParams reference_device();
/// SLUG + HEMT chain (n_noise = 3.2).
AmplifierChain slug_chain();
/// Bare HEMT chain (T_N = 4.1 K referred to the qubit frequency).
AmplifierChain hemt_chain();

}  // namespace rsim
