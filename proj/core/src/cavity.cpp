#include "readoutsim/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "readoutsim/io.hpp"

namespace rsim {

ReadoutPulse ReadoutPulse::constant(double drive_freq, Complex amplitude, double duration, double sample_dt) {
    if (!(sample_dt > 0) || !(duration >= 0)) {
        throw std::invalid_argument("pulse duration must be >= 0 and sample_dt > 0");
    }
    auto n = static_cast<std::size_t>(std::llround(duration / sample_dt));
    return ReadoutPulse{drive_freq, std::vector<Complex>(n, amplitude), sample_dt};
}

void validate(const ReadoutPulse& pulse, double kappa_hz) {
    if (!(pulse.sample_dt > 0)) {
        throw std::invalid_argument("pulse sample_dt must be > 0");
    }
    if (pulse.sample_dt > 1.0 / (20.0 * kappa_hz) * (1 + 1e-12)) {
        throw std::invalid_argument("pulse sample_dt under-resolves the cavity linewidth (need <= 1/(20 kappa))");
    }
    for (const auto& e : pulse.envelope) {
        if (!std::isfinite(e.real()) || !std::isfinite(e.imag())) {
            throw std::invalid_argument("pulse envelope contains a non-finite sample");
        }
    }
}

QubitState StatePath::state_at(double t) const {
    auto passed = std::upper_bound(jump_times.begin(), jump_times.end(), t) - jump_times.begin();
    return passed % 2 == 0 ? initial : flipped(initial);
}

QubitState StatePath::final_state() const {
    return jump_times.size() % 2 == 0 ? initial : flipped(initial);
}

std::optional<double> StatePath::first_jump() const {
    if (jump_times.empty()) {
        return std::nullopt;
    }
    return jump_times.front();
}

bool StatePath::valid_for(double duration) const {
    for (std::size_t i = 0; i < jump_times.size(); ++i) {
        double t = jump_times[i];
        if (!(t >= 0 && t <= duration)) {
            return false;
        }
        if (i > 0 && !(t > jump_times[i - 1])) {
            return false;
        }
    }
    return true;
}

CavityPropagator::CavityPropagator(const DeviceParams& device, const DerivedParams& derived, double drive_freq,
                                   double step_dt)
    : kappa_(angular(device.cavity_linewidth_kappa)), step_dt_(step_dt) {
    for (QubitState s : {QubitState::ground, QubitState::excited}) {
        double shift = derived.cavity_shift(s, device.ground_shift_positive);
        double detuning = angular(device.cavity_freq + shift - drive_freq);
        Complex lam(kappa_ / 2.0, detuning);
        std::size_t i = index(s);
        rate_[i] = lam;
        step_decay_[i] = std::exp(-lam * step_dt);
        step_gain_[i] = (1.0 - step_decay_[i]) / lam;
    }
}

Complex CavityPropagator::advance(Complex alpha, Complex drive, QubitState state, double dt) const {
    if (dt <= 0) {
        return alpha;
    }
    Complex lam = rate(state);
    Complex decay = std::exp(-lam * dt);
    return alpha * decay + Complex(0, -1) * drive * (1.0 - decay) / lam;
}

Complex CavityPropagator::advance_through(Complex alpha, Complex drive, double t0, double dt,
                                          const StatePath& path, std::size_t& cursor, QubitState& state) const {
    const double t1 = t0 + dt;
    // Jumps at the interval start only relabel the state.
    while (cursor < path.jump_times.size() && path.jump_times[cursor] <= t0) {
        state = flipped(state);
        ++cursor;
    }
    if ((cursor >= path.jump_times.size() || path.jump_times[cursor] >= t1) && dt == step_dt_) {
        return step(alpha, drive, state);
    }
    double t = t0;
    while (cursor < path.jump_times.size() && path.jump_times[cursor] < t1) {
        double tj = std::max(path.jump_times[cursor], t);
        alpha = advance(alpha, drive, state, tj - t);
        t = tj;
        state = flipped(state);
        ++cursor;
    }
    return advance(alpha, drive, state, t1 - t);
}

FieldTrajectory simulate_field(const ReadoutPulse& pulse, const StatePath& path, const DeviceParams& device,
                               const DerivedParams& derived, Complex initial_field,
                               std::optional<double> saturation_photons) {
    validate(pulse, device.cavity_linewidth_kappa);
    if (!path.valid_for(pulse.duration())) {
        throw std::invalid_argument("state path jumps must be ascending and inside the pulse");
    }
    CavityPropagator prop(device, derived, pulse.drive_freq, pulse.sample_dt);
    FieldTrajectory out;
    out.sample_dt = pulse.sample_dt;
    out.samples.reserve(pulse.envelope.size());

    Complex alpha = initial_field;
    QubitState state = path.initial;
    std::size_t cursor = 0;
    double max_n = std::norm(alpha);
    for (std::size_t k = 0; k < pulse.envelope.size(); ++k) {
        double t0 = static_cast<double>(k) * pulse.sample_dt;
        alpha = prop.advance_through(alpha, pulse.envelope[k], t0, pulse.sample_dt, path, cursor, state);
        out.samples.push_back(alpha);
        max_n = std::max(max_n, std::norm(alpha));
    }
    out.max_photons = max_n;
    out.over_ncrit = max_n > derived.n_crit;
    out.over_saturation = saturation_photons.has_value() && max_n > *saturation_photons;
    return out;
}

std::pair<double, double> steady_state_photons(Complex drive, const DeviceParams& device,
                                               const DerivedParams& derived, double drive_freq) {
    CavityPropagator prop(device, derived, drive_freq, kDefaultSampleDt);
    return {std::norm(prop.steady_state(drive, QubitState::ground)),
            std::norm(prop.steady_state(drive, QubitState::excited))};
}

double calibrate_drive(double target_n_bar, const DeviceParams& device, const DerivedParams& derived,
                       double drive_freq) {
    if (!(target_n_bar >= 0)) {
        throw std::invalid_argument("target photon number must be >= 0");
    }
    auto [ng, ne] = steady_state_photons(Complex(1.0, 0.0), device, derived, drive_freq);
    return std::sqrt(target_n_bar / (0.5 * (ng + ne)));
}

double photon_depletion_fraction(double wait_s, double kappa_hz) {
    if (!(wait_s >= 0)) {
        throw std::invalid_argument("wait must be >= 0");
    }
    return std::exp(-angular(kappa_hz) * wait_s);
}

void write_trajectory_csv(std::ostream& out, const FieldTrajectory& trajectory) {
    CsvWriter csv(out, {"t", "re_alpha", "im_alpha"});
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        const auto& a = trajectory.samples[k];
        csv.row(static_cast<double>(k + 1) * trajectory.sample_dt, a.real(), a.imag());
    }
}

}  // namespace rsim
