#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <utility>
#include <vector>

#include "readoutsim/model.hpp"

namespace rsim {

using Complex = std::complex<double>;

inline constexpr double kDefaultSampleDt = 1e-9;

/// A measurement tone: complex drive amplitude epsilon(t) in sqrt(photons)/s,
/// held constant over each `sample_dt` interval, in the frame of `drive_freq`.
struct ReadoutPulse {
    double drive_freq = 0.0;
    std::vector<Complex> envelope;
    double sample_dt = kDefaultSampleDt;

    double duration() const { return static_cast<double>(envelope.size()) * sample_dt; }

    static ReadoutPulse constant(double drive_freq, Complex amplitude, double duration,
                                 double sample_dt = kDefaultSampleDt);

    bool operator==(const ReadoutPulse&) const = default;
};

/// Throws std::invalid_argument when the pulse is malformed or under-samples the cavity response
/// (sample_dt must be at most 1 / (20 kappa)).
void validate(const ReadoutPulse& pulse, double kappa_hz);

/// Qubit population history. Each entry of `jump_times` toggles the state
/// (decay e->g or excitation g->e, alternating from `initial`).
struct StatePath {
    QubitState initial = QubitState::ground;
    std::vector<double> jump_times;

    QubitState state_at(double t) const;
    QubitState final_state() const;
    std::optional<double> first_jump() const;

    /// Strictly ascending and inside [0, duration].
    bool valid_for(double duration) const;
};

struct FieldTrajectory {
    std::vector<Complex> samples;  // alpha at the end of each envelope interval
    double sample_dt = kDefaultSampleDt;
    double max_photons = 0.0;
    bool over_ncrit = false;
    bool over_saturation = false;

    Complex final_field() const { return samples.empty() ? Complex{} : samples.back(); }
};

/// Exact propagator for the driven, damped, qubit-conditioned cavity
///
///     d alpha / dt = -[i (delta +/- chi) + kappa / 2] alpha - i epsilon
///
/// with delta = 2 pi (f_cavity - f_drive). Between qubit jumps and within each
/// constant-drive interval the solution is alpha_ss + (alpha_0 - alpha_ss) exp(-lambda t).
class CavityPropagator {
   public:
    CavityPropagator(const DeviceParams& device, const DerivedParams& derived, double drive_freq,
                     double step_dt);

    /// Complex decay rate lambda (1/s) for the given qubit state.
    Complex rate(QubitState state) const { return rate_[index(state)]; }

    /// Steady state under a constant drive.
    Complex steady_state(Complex drive, QubitState state) const { return Complex(0, -1) * drive / rate(state); }

    /// Advances alpha by `dt` with constant drive and qubit state.
    Complex advance(Complex alpha, Complex drive, QubitState state, double dt) const;

    /// Advances alpha by exactly the configured step.
    Complex step(Complex alpha, Complex drive, QubitState state) const {
        std::size_t i = index(state);
        return alpha * step_decay_[i] + Complex(0, -1) * drive * step_gain_[i];
    }

    /// Advances alpha over [t0, t0 + dt) with constant drive, switching the state at
    /// each jump in `path` inside the interval. `cursor` indexes the first jump
    /// not yet passed and is updated; `state` is the state at t0 and is updated.
    Complex advance_through(Complex alpha, Complex drive, double t0, double dt, const StatePath& path,
                            std::size_t& cursor, QubitState& state) const;

    double step_dt() const { return step_dt_; }
    double kappa() const { return kappa_; }

   private:
    static std::size_t index(QubitState s) { return static_cast<std::size_t>(s); }

    double kappa_;
    double step_dt_;
    Complex rate_[2];
    Complex step_decay_[2];
    Complex step_gain_[2];
};

/// Integrates the cavity field along `path` for the whole pulse.
/// Photon-number flags compare max |alpha|^2 with n_crit and `saturation_photons`.
FieldTrajectory simulate_field(const ReadoutPulse& pulse, const StatePath& path, const DeviceParams& device,
                               const DerivedParams& derived, Complex initial_field = {},
                               std::optional<double> saturation_photons = std::nullopt);

/// Constant drive amplitude giving a mean steady-state photon number
/// (n_g + n_e) / 2 equal to `target_n_bar`.
double calibrate_drive(double target_n_bar, const DeviceParams& device, const DerivedParams& derived,
                       double drive_freq);

/// Steady-state photon numbers (n_g, n_e) for a constant drive.
std::pair<double, double> steady_state_photons(Complex drive, const DeviceParams& device,
                                               const DerivedParams& derived, double drive_freq);

/// Residual cavity energy fraction exp(-2 pi kappa wait) after the drive is switched off.
double photon_depletion_fraction(double wait_s, double kappa_hz);

/// CSV with header `t,re_alpha,im_alpha`.
void write_trajectory_csv(std::ostream& out, const FieldTrajectory& trajectory);

}  // namespace rsim
