#include "readoutsim/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "readoutsim/io.hpp"

namespace rsim {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const char* to_string(Intent intent) { return intent == Intent::prepare_g ? "prepare_g" : "prepare_e"; }

const char* to_string(QubitState state) { return state == QubitState::ground ? "g" : "e"; }

void validate(const PreparationModel& prep) {
    auto in_unit = [](double p) { return p >= 0 && p <= 1; };
    if (!in_unit(prep.thermal_excited_population) || !in_unit(prep.pi_pulse_error)) {
        throw std::invalid_argument("preparation probabilities must lie in [0, 1]");
    }
    if (!(prep.pi_pulse_duration > 0)) {
        throw std::invalid_argument("pi_pulse_duration must be > 0");
    }
}

JumpRates JumpRates::from(double t1, double p_th) {
    if (!(t1 > 0)) {
        throw std::invalid_argument("t1 must be > 0");
    }
    if (!(p_th >= 0 && p_th < 1)) {
        throw std::invalid_argument("thermal population must lie in [0, 1)");
    }
    double down = std::isinf(t1) ? 0.0 : 1.0 / t1;
    return JumpRates{down, down * p_th / (1.0 - p_th)};
}

QubitState sample_preparation(Intent intent, const PreparationModel& prep, Engine& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    QubitState s = u(rng) < prep.thermal_excited_population ? QubitState::excited : QubitState::ground;
    if (intent == Intent::prepare_e && !(u(rng) < prep.pi_pulse_error)) {
        s = flipped(s);
    }
    return s;
}

namespace {

// Appends spontaneous jumps over [t0, t1) to `path`, starting from `state`.
QubitState append_jumps(StatePath& path, QubitState state, double t0, double t1, const JumpRates& rates,
                        Engine& rng) {
    double t = t0;
    for (;;) {
        double rate = rates.rate(state);
        if (rate <= 0) {
            return state;
        }
        std::exponential_distribution<double> wait(rate);
        t += wait(rng);
        if (!(t < t1)) {
            return state;
        }
        if (!path.jump_times.empty() && !(t > path.jump_times.back())) {
            continue;
        }
        path.jump_times.push_back(t);
        state = flipped(state);
    }
}

double step_duration(const SequenceStep& s) {
    return std::visit(overloaded{[](const step::Readout& r) { return r.pulse.duration(); },
                                 [](const step::Idle& i) { return i.duration; },
                                 [](const step::PiPulse& p) { return p.duration; }},
                      s);
}

}  // namespace

StatePath sample_jump_path(QubitState initial, double t1, double p_th, double duration, Engine& rng) {
    if (!(duration >= 0)) {
        throw std::invalid_argument("duration must be >= 0");
    }
    StatePath path{initial, {}};
    append_jumps(path, initial, 0.0, duration, JumpRates::from(t1, p_th), rng);
    return path;
}

double MeasurementSequence::duration() const {
    double total = 0;
    for (const auto& s : steps) {
        total += step_duration(s);
    }
    return total;
}

std::size_t MeasurementSequence::readout_count() const {
    return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const SequenceStep& s) {
        return std::holds_alternative<step::Readout>(s);
    }));
}

double MeasurementSequence::frame_freq() const {
    for (const auto& s : steps) {
        if (const auto* r = std::get_if<step::Readout>(&s)) {
            return r->pulse.drive_freq;
        }
    }
    return 0.0;
}

MeasurementSequence standard_sequence(const ReadoutPulse& pulse, const PreparationModel& prep) {
    MeasurementSequence seq;
    seq.steps.emplace_back(step::PiPulse{prep.pi_pulse_duration, true});
    seq.steps.emplace_back(step::Readout{pulse});
    return seq;
}

std::optional<double> Shot::first_spontaneous_jump() const {
    for (double t : true_path.jump_times) {
        if (std::find(control_flips.begin(), control_flips.end(), t) == control_flips.end()) {
            return t;
        }
    }
    return std::nullopt;
}

Shot generate_shot(std::uint64_t index, Intent intent, const MeasurementSequence& sequence,
                   const ShotContext& ctx) {
    const double frame = sequence.frame_freq();
    for (const auto& s : sequence.steps) {
        if (const auto* r = std::get_if<step::Readout>(&s)) {
            if (r->pulse.drive_freq != frame) {
                throw std::invalid_argument("all readouts in a sequence must share one drive frequency");
            }
        }
    }

    Engine rng = make_engine(ctx.noise.seed, ctx.stream, index);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const JumpRates rates = JumpRates::from(ctx.device.t1, ctx.prep.thermal_excited_population);

    Shot shot;
    shot.index = index;
    shot.intent = intent;

    // Qubit history.
    QubitState state;
    if (sequence.start == MeasurementSequence::Start::equal_superposition) {
        state = u(rng) < 0.5 ? QubitState::excited : QubitState::ground;
    } else {
        state = u(rng) < ctx.prep.thermal_excited_population ? QubitState::excited : QubitState::ground;
    }
    shot.initial_state = state;
    shot.true_path.initial = state;
    double t = 0;
    for (const auto& s : sequence.steps) {
        double len = step_duration(s);
        if (const auto* pi = std::get_if<step::PiPulse>(&s)) {
            double mid = t + 0.5 * len;
            state = append_jumps(shot.true_path, state, t, mid, rates, rng);
            bool act = !pi->conditional || intent == Intent::prepare_e;
            if (act && !(u(rng) < ctx.prep.pi_pulse_error)) {
                if (shot.true_path.jump_times.empty() || mid > shot.true_path.jump_times.back()) {
                    shot.true_path.jump_times.push_back(mid);
                    shot.control_flips.push_back(mid);
                    state = flipped(state);
                } else {
                    // A spontaneous jump landed exactly on the flip; the two cancel.
                    shot.true_path.jump_times.pop_back();
                    state = flipped(state);
                }
            }
            state = append_jumps(shot.true_path, state, mid, t + len, rates, rng);
        } else {
            state = append_jumps(shot.true_path, state, t, t + len, rates, rng);
        }
        t += len;
    }

    // Cavity field and records.
    const double sqrt_s = std::sqrt(ctx.noise.spectral_density());
    const bool noisy = ctx.noise.enabled;
    std::normal_distribution<double> gauss(0.0, 1.0);
    Complex alpha{};
    QubitState qs = shot.true_path.initial;
    std::size_t cursor = 0;
    double max_n = 0;
    t = 0;
    for (const auto& s : sequence.steps) {
        if (const auto* r = std::get_if<step::Readout>(&s)) {
            const ReadoutPulse& pulse = r->pulse;
            validate(pulse, ctx.device.cavity_linewidth_kappa);
            CavityPropagator prop(ctx.device, ctx.derived, pulse.drive_freq, pulse.sample_dt);
            const double scale = std::sqrt(prop.kappa() * pulse.sample_dt);
            std::vector<Complex> rec(pulse.envelope.size());
            for (std::size_t k = 0; k < rec.size(); ++k) {
                double tk = t + static_cast<double>(k) * pulse.sample_dt;
                alpha = prop.advance_through(alpha, pulse.envelope[k], tk, pulse.sample_dt, shot.true_path, cursor, qs);
                max_n = std::max(max_n, std::norm(alpha));
                Complex sample = scale * alpha;
                if (noisy) {
                    double re = gauss(rng);
                    double im = gauss(rng);
                    sample += sqrt_s * Complex(re, im);
                }
                rec[k] = sample;
            }
            shot.readout_starts.push_back(t);
            shot.records.push_back(std::move(rec));
            t += pulse.duration();
        } else {
            double len = step_duration(s);
            CavityPropagator prop(ctx.device, ctx.derived, frame, len > 0 ? len : 1.0);
            alpha = prop.advance_through(alpha, Complex{}, t, len, shot.true_path, cursor, qs);
            t += len;
        }
    }
    shot.max_photons = max_n;
    shot.flags.over_ncrit = max_n > ctx.derived.n_crit;
    shot.flags.over_saturation = max_n > ctx.chain.saturation_photons;
    return shot;
}

Shot generate_shot(std::uint64_t index, Intent intent, const ReadoutPulse& pulse, const ShotContext& context) {
    return generate_shot(index, intent, standard_sequence(pulse, context.prep), context);
}

void write_shots_csv(std::ostream& out, const std::vector<Shot>& shots) {
    CsvWriter csv(out, {"index", "intent", "initial_state", "first_jump_time"});
    for (const auto& s : shots) {
        auto jump = s.first_spontaneous_jump();
        csv.row(s.index, to_string(s.intent), to_string(s.initial_state),
                jump ? format_double(*jump) : std::string());
    }
}

}  // namespace rsim
