#include "readoutsim/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "readoutsim/parallel.hpp"

namespace rsim {

ShotContext ExperimentSetup::shot_context(std::uint64_t stream) const {
    ShotContext ctx;
    ctx.device = device;
    ctx.derived = derive_params(device);
    ctx.prep = prep;
    ctx.noise = NoiseModel{chain.noise_photons, seed, noise_enabled};
    ctx.chain = chain;
    ctx.stream = stream;
    return ctx;
}

ReadoutPulse make_readout_pulse(const DeviceParams& device, double drive_freq, double n_bar, double duration,
                                double sample_dt) {
    double eps = calibrate_drive(n_bar, device, derive_params(device), drive_freq);
    return ReadoutPulse::constant(drive_freq, Complex(eps, 0.0), duration, sample_dt);
}

ExperimentSetup reference_setup(std::uint64_t seed) {
    ExperimentSetup s;
    s.device = reference_device();
    s.chain = slug_chain();
    s.prep = PreparationModel{};
    s.pulse = make_readout_pulse(s.device, 8.0762e9, 24.0, 200e-9);
    s.filter = FilterSpec{FilterKind::boxcar, 0.0, 200e-9, 0.0, {}};
    s.seed = seed;
    return s;
}

void PhysicsFlags::merge(const ShotFlags& f, double photons) {
    shots_over_ncrit += f.over_ncrit ? 1 : 0;
    shots_over_saturation += f.over_saturation ? 1 : 0;
    max_photons = std::max(max_photons, photons);
}

namespace {

Intent intent_of(std::size_t index, std::size_t n_g) {
    return index < n_g ? Intent::prepare_g : Intent::prepare_e;
}

std::size_t ground_count(std::size_t n_shots) {
    if (n_shots < 2) {
        throw std::invalid_argument("at least 2 shots are required");
    }
    return n_shots / 2;
}

// Window-aligned bin size in samples for the calibration search.
std::size_t calibration_bin(const ExperimentSetup& setup, const ReadoutPulse& pulse, std::size_t length) {
    if (setup.optimize_window && setup.filter.kind == FilterKind::boxcar) {
        auto m = static_cast<std::size_t>(std::llround(setup.window_grid / pulse.sample_dt));
        return std::clamp<std::size_t>(m, 1, length);
    }
    SampleWindow w = window_samples(setup.filter, pulse.sample_dt, length);
    return std::gcd(std::gcd(w.first, w.count), length);
}

std::vector<Complex> bin_record(const std::vector<Complex>& rec, std::size_t m) {
    std::vector<Complex> out(rec.size() / m);
    for (std::size_t b = 0; b < out.size(); ++b) {
        Complex acc{};
        for (std::size_t k = 0; k < m; ++k) {
            acc += rec[b * m + k];
        }
        out[b] = acc;
    }
    return out;
}

}  // namespace

CalibratedReadout calibrate_readout(const ExperimentSetup& setup, const ReadoutPulse& pulse, std::size_t n_shots) {
    const std::size_t n_g = ground_count(n_shots);
    const std::size_t length = pulse.envelope.size();
    if (length == 0) {
        throw std::invalid_argument("readout pulse is empty");
    }
    const std::size_t m = calibration_bin(setup, pulse, length);
    const std::size_t nb = length / m;

    const ShotContext ctx = setup.shot_context(streams::calibration);
    const MeasurementSequence seq = standard_sequence(pulse, setup.prep);
    std::vector<std::vector<Complex>> bins(n_shots);
    parallel_for(n_shots, setup.threads, [&](std::size_t i) {
        Shot shot = generate_shot(i, intent_of(i, n_g), seq, ctx);
        bins[i] = bin_record(shot.record(), m);
    });

    // Mean e - g difference per bin.
    std::vector<Complex> diff(nb);
    for (std::size_t i = 0; i < n_shots; ++i) {
        double w = i < n_g ? -1.0 / static_cast<double>(n_g) : 1.0 / static_cast<double>(n_shots - n_g);
        for (std::size_t b = 0; b < nb; ++b) {
            diff[b] += w * bins[i][b];
        }
    }

    CalibratedReadout out;
    out.filter = setup.filter;
    out.filter.weights.clear();
    const double dt = pulse.sample_dt;

    if (setup.filter.kind == FilterKind::matched) {
        SampleWindow win = window_samples(setup.filter, dt, length);
        std::vector<Complex> w(win.count);
        for (std::size_t k = 0; k < win.count; ++k) {
            w[k] = diff[(win.first + k) / m] / static_cast<double>(m);
        }
        out.filter.weights = normalize_weights(std::move(w));
        // The weights carry the pointer geometry.
        if (setup.optimize_phase) {
            out.filter.quadrature_phase = 0.0;
        }
        std::vector<double> sg(n_g), se(n_shots - n_g);
        for (std::size_t i = 0; i < n_shots; ++i) {
            Complex acc{};
            for (std::size_t b = win.first / m; b < (win.first + win.count) / m; ++b) {
                acc += std::conj(out.filter.weights[b * m - win.first]) * bins[i][b];
            }
            double s = (std::polar(1.0, -out.filter.quadrature_phase) * acc).real();
            (i < n_g ? sg[i] : se[i - n_g]) = s;
        }
        out.threshold = fit_threshold(sg, se);
        out.calibration_fidelity = compute_report(sg, se, out.threshold).fidelity;
        return out;
    }

    if (setup.optimize_phase) {
        Complex total = std::accumulate(diff.begin(), diff.end(), Complex{});
        out.filter.quadrature_phase = std::abs(total) > 0 ? std::arg(total) : 0.0;
    }
    const Complex rot = std::polar(1.0, -out.filter.quadrature_phase);

    // Projected prefix sums, one row of nb + 1 per shot.
    std::vector<double> prefix(n_shots * (nb + 1));
    for (std::size_t i = 0; i < n_shots; ++i) {
        double* row = &prefix[i * (nb + 1)];
        row[0] = 0;
        for (std::size_t b = 0; b < nb; ++b) {
            row[b + 1] = row[b] + (rot * bins[i][b]).real();
        }
    }

    std::size_t first_bin;
    std::size_t count_bins;
    if (setup.optimize_window) {
        first_bin = 0;
        count_bins = nb;
        double best_f = -std::numeric_limits<double>::infinity();
        std::vector<double> sg(n_g), se(n_shots - n_g);
        for (std::size_t s = 0; s < nb; ++s) {
            for (std::size_t len = 1; s + len <= nb; ++len) {
                for (std::size_t i = 0; i < n_shots; ++i) {
                    const double* row = &prefix[i * (nb + 1)];
                    double v = row[s + len] - row[s];
                    (i < n_g ? sg[i] : se[i - n_g]) = v / static_cast<double>(len);
                }
                double f = 1.0 - fit_threshold(sg, se).error_sum;
                if (f > best_f) {
                    best_f = f;
                    first_bin = s;
                    count_bins = len;
                }
            }
        }
        out.filter.window_start = static_cast<double>(first_bin * m) * dt;
        out.filter.window_length = static_cast<double>(count_bins * m) * dt;
    } else {
        SampleWindow win = window_samples(setup.filter, dt, length);
        first_bin = win.first / m;
        count_bins = win.count / m;
    }

    std::vector<double> sg(n_g), se(n_shots - n_g);
    const double norm = static_cast<double>(count_bins * m);
    for (std::size_t i = 0; i < n_shots; ++i) {
        const double* row = &prefix[i * (nb + 1)];
        double v = (row[first_bin + count_bins] - row[first_bin]) / norm;
        (i < n_g ? sg[i] : se[i - n_g]) = v;
    }
    out.threshold = fit_threshold(sg, se);
    out.calibration_fidelity = compute_report(sg, se, out.threshold).fidelity;
    return out;
}

FidelityResult run_fidelity(const ExperimentSetup& setup, std::size_t n_shots) {
    const std::size_t n_g = ground_count(n_shots);
    FidelityResult result;
    result.readout = calibrate_readout(setup, setup.pulse, n_shots);

    const ShotContext ctx = setup.shot_context(streams::shots);
    const MeasurementSequence seq = standard_sequence(setup.pulse, setup.prep);
    std::vector<double> scores(n_shots);
    std::vector<ShotFlags> flags(n_shots);
    std::vector<double> photons(n_shots);
    parallel_for(n_shots, setup.threads, [&](std::size_t i) {
        Shot shot = generate_shot(i, intent_of(i, n_g), seq, ctx);
        scores[i] = apply_filter(shot.record(), setup.pulse.sample_dt, result.readout.filter);
        flags[i] = shot.flags;
        photons[i] = shot.max_photons;
    });
    for (std::size_t i = 0; i < n_shots; ++i) {
        result.flags.merge(flags[i], photons[i]);
    }
    result.scores_g.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(n_g));
    result.scores_e.assign(scores.begin() + static_cast<std::ptrdiff_t>(n_g), scores.end());
    result.report = compute_report(result.scores_g, result.scores_e, result.readout.threshold);
    result.histogram = build_histogram(result.scores_g, result.scores_e, setup.histogram_bins);
    return result;
}

namespace {

ExperimentSetup full_window_setup(const ExperimentSetup& setup, const ReadoutPulse& pulse) {
    ExperimentSetup s = setup;
    s.optimize_window = false;
    s.filter.kind = FilterKind::boxcar;
    s.filter.window_start = 0.0;
    s.filter.window_length = pulse.duration();
    s.filter.weights.clear();
    return s;
}

}  // namespace

QndResult run_qnd(const ExperimentSetup& setup, std::span<const double> delays, std::size_t n_shots) {
    for (std::size_t i = 0; i < delays.size(); ++i) {
        if (!(delays[i] >= 0) || (i > 0 && delays[i] < delays[i - 1])) {
            throw std::invalid_argument("qnd delays must be non-negative and ascending");
        }
    }
    if (n_shots == 0) {
        throw std::invalid_argument("qnd needs at least one shot per delay");
    }
    const ExperimentSetup full = full_window_setup(setup, setup.pulse);
    const CalibratedReadout readout = calibrate_readout(full, setup.pulse, std::max<std::size_t>(n_shots, 2));
    const double dt = setup.pulse.sample_dt;
    const double t_meas = setup.pulse.duration();

    QndResult result;
    result.delays.assign(delays.begin(), delays.end());
    for (std::size_t d = 0; d < delays.size(); ++d) {
        MeasurementSequence seq;
        seq.start = MeasurementSequence::Start::equal_superposition;
        seq.steps = {step::Readout{setup.pulse}, step::Idle{delays[d]}, step::Readout{setup.pulse}};
        const ShotContext ctx = setup.shot_context((streams::qnd << 20) | d);

        struct Outcome {
            bool first_e;
            bool second_e;
            bool state_e;
            ShotFlags flags;
            double photons;
        };
        std::vector<Outcome> out(n_shots);
        parallel_for(n_shots, setup.threads, [&](std::size_t i) {
            Shot shot = generate_shot(i, Intent::prepare_g, seq, ctx);
            double s1 = apply_filter(shot.records[0], dt, readout.filter);
            double s2 = apply_filter(shot.records[1], dt, readout.filter);
            double centre = shot.readout_starts[1] + 0.5 * t_meas;
            out[i] = Outcome{readout.threshold.reads_excited(s1), readout.threshold.reads_excited(s2),
                             shot.true_path.state_at(centre) == QubitState::excited, shot.flags, shot.max_photons};
        });

        std::size_t cg = 0, ce = 0, gg = 0, ee = 0, gg_state = 0, ee_state = 0;
        for (const auto& o : out) {
            result.flags.merge(o.flags, o.photons);
            if (o.first_e) {
                ++ce;
                ee += o.second_e ? 1 : 0;
                ee_state += o.state_e ? 1 : 0;
            } else {
                ++cg;
                gg += o.second_e ? 0 : 1;
                gg_state += o.state_e ? 0 : 1;
            }
        }
        auto ratio = [](std::size_t a, std::size_t b) {
            return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
        };
        result.p_gg.push_back(ratio(gg, cg));
        result.p_ee.push_back(ratio(ee, ce));
        result.p_gg_state.push_back(ratio(gg_state, cg));
        result.p_ee_state.push_back(ratio(ee_state, ce));
        result.conditioned_g.push_back(cg);
        result.conditioned_e.push_back(ce);
        if (cg < 100 || ce < 100) {
            result.low_statistics = true;
        }
    }
    if (delays.size() >= 4 && delays.back() > delays.front()) {
        std::vector<double> x(delays.begin(), delays.end());
        bool strictly = std::adjacent_find(x.begin(), x.end()) == x.end();
        if (strictly) {
            result.fit_gg = fit_exponential(x, result.p_gg);
            result.fit_ee = fit_exponential(x, result.p_ee);
            result.fits_valid = true;
        }
    }
    return result;
}

PostSelectionResult run_postselection(const ExperimentSetup& setup, std::size_t n_shots,
                                      const PostSelectionTiming& timing) {
    const std::size_t n_g = ground_count(n_shots);
    if (!(timing.pre_measurement > 0) || !(timing.depletion_wait >= 0)) {
        throw std::invalid_argument("post-selection timing must be positive");
    }
    PostSelectionResult result;
    result.main_readout = calibrate_readout(setup, setup.pulse, n_shots);

    // Rectangular pre-measurement at the main pulse's mean drive.
    Complex mean_drive = std::accumulate(setup.pulse.envelope.begin(), setup.pulse.envelope.end(), Complex{}) /
                         static_cast<double>(setup.pulse.envelope.size());
    ReadoutPulse pre = ReadoutPulse::constant(setup.pulse.drive_freq, mean_drive, timing.pre_measurement,
                                              setup.pulse.sample_dt);
    result.pre_readout = calibrate_readout(full_window_setup(setup, pre), pre, n_shots);

    MeasurementSequence seq;
    seq.steps = {step::Readout{pre}, step::Idle{timing.depletion_wait}, step::PiPulse{setup.prep.pi_pulse_duration, true},
                 step::Readout{setup.pulse}};
    const ShotContext ctx = setup.shot_context(streams::postselect);

    struct Outcome {
        double score;
        bool keep;
        ShotFlags flags;
        double photons;
    };
    std::vector<Outcome> out(n_shots);
    const double dt = setup.pulse.sample_dt;
    parallel_for(n_shots, setup.threads, [&](std::size_t i) {
        Shot shot = generate_shot(i, intent_of(i, n_g), seq, ctx);
        double s_pre = apply_filter(shot.records[0], dt, result.pre_readout.filter);
        double s_main = apply_filter(shot.records[1], dt, result.main_readout.filter);
        out[i] = Outcome{s_main, !result.pre_readout.threshold.reads_excited(s_pre), shot.flags, shot.max_photons};
    });

    std::vector<double> raw_g, raw_e, sel_g, sel_e;
    raw_g.reserve(n_g);
    raw_e.reserve(n_shots - n_g);
    for (std::size_t i = 0; i < n_shots; ++i) {
        const auto& o = out[i];
        result.flags.merge(o.flags, o.photons);
        bool ground = i < n_g;
        (ground ? raw_g : raw_e).push_back(o.score);
        if (o.keep) {
            (ground ? sel_g : sel_e).push_back(o.score);
        }
    }
    if (sel_g.empty() || sel_e.empty()) {
        throw std::runtime_error("post-selection discarded every shot of one class");
    }
    result.raw = compute_report(raw_g, raw_e, result.main_readout.threshold);
    result.selected = compute_report(sel_g, sel_e, result.main_readout.threshold);
    result.discard_fraction =
        1.0 - static_cast<double>(sel_g.size() + sel_e.size()) / static_cast<double>(n_shots);
    result.excessive_discard = result.discard_fraction > 0.5;
    result.raw_histogram = build_histogram(raw_g, raw_e, setup.histogram_bins);
    result.selected_histogram = build_histogram(sel_g, sel_e, setup.histogram_bins);
    return result;
}

ThermalCalibration calibrate_thermal_population(const ExperimentSetup& setup, double target_error_g,
                                                std::size_t n_shots, double tolerance) {
    if (!(target_error_g > 0 && target_error_g < 0.5)) {
        throw std::invalid_argument("target ground-state error must lie in (0, 0.5)");
    }
    ThermalCalibration cal;
    auto error_at = [&](double p) {
        ExperimentSetup s = setup;
        s.prep.thermal_excited_population = p;
        ++cal.iterations;
        return run_fidelity(s, n_shots).report.error_g - target_error_g;
    };

    // error_g grows about one-for-one with p_th, so the first secant step starts
    // from the residual at p_th = target and converges in a few evaluations.
    constexpr double lo = 0.0;
    constexpr double hi = 0.5;
    double p0 = target_error_g;
    double f0 = error_at(p0);
    cal.thermal_excited_population = p0;
    double best = f0;
    double p1 = std::clamp(p0 - f0, lo, hi);
    double f1 = p1 == p0 ? f0 : error_at(p1);
    if (std::abs(f1) < std::abs(best)) {
        best = f1;
        cal.thermal_excited_population = p1;
    }
    for (int it = 0; it < 8 && std::abs(best) > tolerance && f1 != f0; ++it) {
        double p2 = std::clamp(p1 - f1 * (p1 - p0) / (f1 - f0), lo, hi);
        if (p2 == p1) {
            break;
        }
        double f2 = error_at(p2);
        p0 = p1;
        f0 = f1;
        p1 = p2;
        f1 = f2;
        if (std::abs(f2) < std::abs(best)) {
            best = f2;
            cal.thermal_excited_population = p2;
        }
    }
    cal.error_g = target_error_g + best;
    cal.converged = std::abs(best) <= tolerance;
    return cal;
}

}  // namespace rsim
