#include "readoutsim/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace rsim {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

}  // namespace

void validate(const DeviceParams& d) {
    require(std::isfinite(d.cavity_freq) && d.cavity_freq > 0, "cavity_freq must be > 0");
    require(std::isfinite(d.cavity_linewidth_kappa) && d.cavity_linewidth_kappa > 0,
            "cavity_linewidth_kappa must be > 0");
    require(std::isfinite(d.qubit_freq) && d.qubit_freq > 0, "qubit_freq must be > 0");
    require(std::isfinite(d.anharmonicity) && d.anharmonicity > 0, "anharmonicity must be > 0");
    require(std::isfinite(d.coupling_g) && d.coupling_g > 0, "coupling_g must be > 0");
    require(d.t1 > 0, "t1 must be > 0");
    require(d.t2_star > 0, "t2_star must be > 0");
    require(d.t2_star <= 2.0 * d.t1, "t2_star must not exceed 2*t1");
    double ratio = std::abs(d.qubit_freq - d.cavity_freq) / d.coupling_g;
    require(ratio >= kMinDispersiveRatio,
            "|qubit_freq - cavity_freq| / coupling_g = " + std::to_string(ratio) +
                " is below the dispersive limit of " + std::to_string(kMinDispersiveRatio));
}

void validate(const AmplifierChain& c) {
    require(std::isfinite(c.noise_photons) && c.noise_photons >= 0, "noise_photons must be >= 0");
    require(c.saturation_photons > 0, "saturation_photons must be > 0");
}

double DerivedParams::cavity_shift(QubitState state, bool ground_shift_positive) const {
    double mag = std::abs(chi);
    bool up = (state == QubitState::ground) == ground_shift_positive;
    return up ? mag : -mag;
}

DerivedParams derive_params(const DeviceParams& device) {
    validate(device);
    DerivedParams out;
    out.detuning_delta = device.qubit_freq - device.cavity_freq;
    double g2 = device.coupling_g * device.coupling_g;
    out.chi = device.chi_override.value_or(g2 / out.detuning_delta);
    out.n_crit = out.detuning_delta * out.detuning_delta / (4.0 * g2);
    return out;
}

double noise_photons_from_temperature(double temperature_kelvin, double reference_freq_hz) {
    require(temperature_kelvin >= 0, "temperature must be >= 0");
    require(reference_freq_hz > 0, "reference frequency must be > 0");
    return kBoltzmann * temperature_kelvin / (kPlanckReduced * angular(reference_freq_hz));
}

double snr_theoretical(double n_bar, double kappa_hz, double tau_s, double n_noise, double sin_theta_bar) {
    require(n_bar >= 0 && kappa_hz >= 0 && tau_s >= 0 && n_noise >= 0, "arguments must be >= 0");
    require(sin_theta_bar >= 0 && sin_theta_bar <= 1, "sin_theta_bar must lie in [0, 1]");
    return 2.0 * sin_theta_bar * std::sqrt(n_bar * angular(kappa_hz) * tau_s / (2.0 * n_noise + 1.0));
}

double snr_improvement_db(double n_noise_a, double n_noise_b) {
    require(n_noise_a >= 0 && n_noise_b >= 0, "noise photon numbers must be >= 0");
    return 10.0 * std::log10((2.0 * n_noise_b + 1.0) / (2.0 * n_noise_a + 1.0));
}

DeviceParams reference_device() {
    DeviceParams d;
    d.cavity_freq = 8.081e9;
    d.cavity_linewidth_kappa = 10e6;
    d.qubit_freq = 5.0353e9;
    d.anharmonicity = 233e6;
    d.coupling_g = 67.6e6;
    d.t1 = 2.8e-6;
    d.t2_star = 2.0e-6;
    return d;
}

AmplifierChain slug_chain() {
    return AmplifierChain{.noise_photons = 3.2, .power_gain_db = 55.0, .saturation_photons = 35.0};
}

AmplifierChain hemt_chain() {
    return AmplifierChain{.noise_photons = noise_photons_from_temperature(4.1, 5.0353e9),
                          .power_gain_db = 40.0,
                          .saturation_photons = 1e6};
}

}  // namespace rsim
