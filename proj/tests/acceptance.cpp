// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "readoutsim/optimizer.hpp"
#include "readoutsim/protocols.hpp"
#include "readoutsim/rng.hpp"

using namespace rsim;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void expect(bool cond, const std::string& text) {
        ok = ok && cond;
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += text + (cond ? "" : " [out of band]");
    }
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

bool within(double value, double target, double tol) { return std::abs(value - target) <= tol; }

constexpr double kDrive = 8.0762e9;
constexpr std::size_t kShots = 80000;
constexpr std::size_t kFidelityShots = 160000;
constexpr std::uint64_t kCalibrationSeed = 7;
constexpr std::uint64_t kSeed = 8;
// Midpoint of the error_g range compatible with both the error_g and fidelity bands.
constexpr double kTargetErrorG = 0.026;

double calibrated_p_th = PreparationModel{}.thermal_excited_population;

Check derived_constants() {
    Check c;
    DerivedParams d = derive_params(reference_device());
    c.expect(within(d.n_crit, 507, 1), "n_crit=" + fmt("%.2f", d.n_crit) + " (507 +/- 1)");
    double two_chi = 2 * std::abs(d.chi) / 1e6;
    c.expect(within(two_chi, 3.0, 0.05), "|2chi|=" + fmt("%.4f", two_chi) + " MHz (3.0 +/- 0.05)");
    return c;
}

Check noise_budget() {
    Check c;
    double n = noise_photons_from_temperature(0.8, 5.0353e9);
    c.expect(within(n, 3.31, 0.01), "n(0.8 K)=" + fmt("%.4f", n) + " (3.31 +/- 0.01)");
    double db = snr_improvement_db(slug_chain().noise_photons, hemt_chain().noise_photons);
    c.expect(within(db, 6.7, 0.3), "SLUG vs HEMT=" + fmt("%.3f", db) + " dB (6.7 +/- 0.3)");
    c.expect(std::abs(db - 7.0) <= 0.5, "gap to measured 7 dB=" + fmt("%.2f", std::abs(db - 7.0)) + " dB (<= 0.5)");
    return c;
}

double snr_of(std::span<const double> g, std::span<const double> e) {
    auto stats = [](std::span<const double> xs) {
        double m = 0;
        for (double x : xs) {
            m += x;
        }
        m /= static_cast<double>(xs.size());
        double v = 0;
        for (double x : xs) {
            v += (x - m) * (x - m);
        }
        return std::pair{m, std::sqrt(v / static_cast<double>(xs.size()))};
    };
    auto [mg, sg] = stats(g);
    auto [me, se] = stats(e);
    return std::abs(mg - me) / (sg + se);
}

// Pointer-state SNR: n_bar = 24, 200 ns boxcar, n_noise = 3.2, qubit free of decay and
// preparation error, window placed after the cavity has settled.
Check snr_consistency() {
    Check c;
    ExperimentSetup s = reference_setup(kSeed);
    s.device.t1 = std::numeric_limits<double>::infinity();
    s.prep.thermal_excited_population = 0;
    s.prep.pi_pulse_error = 0;
    s.pulse = make_readout_pulse(s.device, kDrive, 24, 500e-9);
    s.optimize_window = false;
    s.filter = FilterSpec{FilterKind::boxcar, 300e-9, 200e-9, 0.0, {}};
    FidelityResult r = run_fidelity(s, 40000);

    DerivedParams d = derive_params(s.device);
    CavityPropagator prop(s.device, d, kDrive, s.pulse.sample_dt);
    Complex eps = s.pulse.envelope.front();
    Complex sep = prop.steady_state(eps, QubitState::excited) - prop.steady_state(eps, QubitState::ground);
    double analytic = std::sqrt(angular(s.device.cavity_linewidth_kappa)) * std::abs(sep) * std::sqrt(200e-9) /
                      std::sqrt(2 * s.chain.noise_photons + 1);

    constexpr std::size_t kBatches = 20;
    const std::size_t per = r.scores_g.size() / kBatches;
    std::vector<double> batch;
    for (std::size_t b = 0; b < kBatches; ++b) {
        batch.push_back(snr_of(std::span(r.scores_g).subspan(b * per, per), std::span(r.scores_e).subspan(b * per, per)));
    }
    double mean = 0;
    for (double x : batch) {
        mean += x;
    }
    mean /= kBatches;
    double var = 0;
    for (double x : batch) {
        var += (x - mean) * (x - mean);
    }
    double sigma = std::sqrt(var / (kBatches - 1)) / std::sqrt(static_cast<double>(kBatches));

    double snr = r.report.snr_meas;
    c.expect(snr >= 2.5 && snr <= 4.0, "SNR_meas=" + fmt("%.4f", snr) + " in [2.5, 4.0]");
    c.expect(std::abs(snr - analytic) <= 3 * sigma,
             "analytic=" + fmt("%.4f", analytic) + ", |diff|=" + fmt("%.4f", std::abs(snr - analytic)) +
                 " <= 3 sigma=" + fmt("%.4f", 3 * sigma));
    return c;
}

ExperimentSetup calibrated_setup(std::uint64_t seed) {
    ExperimentSetup s = reference_setup(seed);
    s.prep.thermal_excited_population = calibrated_p_th;
    return s;
}

Check fidelity() {
    Check c;
    ThermalCalibration cal = calibrate_thermal_population(reference_setup(kCalibrationSeed), kTargetErrorG, kFidelityShots);
    c.expect(cal.converged, "p_th=" + fmt("%.5f", cal.thermal_excited_population) + " calibrated to error_g " +
                                fmt("%.2f%%", 100 * kTargetErrorG));
    calibrated_p_th = cal.thermal_excited_population;
    FidelityResult r = run_fidelity(calibrated_setup(kSeed), kFidelityShots);
    const DiscriminationReport& d = r.report;
    c.expect(within(d.error_g, 0.028, 0.005), "error_g=" + fmt("%.2f%%", 100 * d.error_g) + " (2.8 +/- 0.5)");
    c.expect(within(d.fidelity, 0.919, 0.015), "F=" + fmt("%.2f%%", 100 * d.fidelity) + " (91.9 +/- 1.5)");
    c.expect(within(d.error_e, 0.053, 0.015), "error_e=" + fmt("%.2f%%", 100 * d.error_e) + " (5.3 +/- 1.5)");
    return c;
}

Check postselection() {
    Check c;
    PostSelectionResult r = run_postselection(calibrated_setup(kSeed), kShots, PostSelectionTiming{320e-9, 300e-9});
    double gain = r.selected.fidelity - r.raw.fidelity;
    c.expect(within(gain, 0.024, 0.01), "F " + fmt("%.2f%%", 100 * r.raw.fidelity) + " -> " +
                                            fmt("%.2f%%", 100 * r.selected.fidelity) + ", gain " +
                                            fmt("%.2f%%", 100 * gain) + " (2.4 +/- 1.0)");
    c.expect(within(r.selected.error_g, 0.010, 0.005),
             "selected error_g=" + fmt("%.2f%%", 100 * r.selected.error_g) + " (1.0 +/- 0.5)");
    return c;
}

Check qnd() {
    Check c;
    const std::vector<double> delays{0, 0.25e-6, 0.5e-6, 1e-6, 1.5e-6, 2e-6, 3e-6, 4e-6, 5e-6, 6e-6, 8e-6};
    QndResult r = run_qnd(calibrated_setup(kSeed), delays, 20000);
    c.expect(within(r.p_gg.front(), 0.983, 0.010), "P_g|g(0)=" + fmt("%.2f%%", 100 * r.p_gg.front()) + " (98.3 +/- 1.0)");
    c.expect(within(r.p_ee.front(), 0.911, 0.015), "P_e|e(0)=" + fmt("%.2f%%", 100 * r.p_ee.front()) + " (91.1 +/- 1.5)");
    double tau = r.fit_ee.decay_time;
    c.expect(r.fits_valid && std::abs(tau / 2.8e-6 - 1) <= 0.10,
             "P_e|e decay time=" + fmt("%.3f", tau * 1e6) + " us (2.8 +/- 10%)");
    return c;
}

Check gaussian_bound() {
    Check c;
    constexpr double kSnr = 3.3;
    constexpr std::size_t kPerClass = 50000;
    Engine rng = make_engine(kSeed, 0xacce, 7);
    std::normal_distribution<double> unit;
    std::vector<double> g(kPerClass);
    std::vector<double> e(kPerClass);
    for (auto& x : g) {
        x = unit(rng);
    }
    for (auto& x : e) {
        x = 2 * kSnr + unit(rng);
    }
    DiscriminationReport r = compute_report(g, e, fit_threshold(g, e));
    double expected = 1 - gaussian_fidelity_bound(kSnr);
    double p = expected / 2;
    double sigma = std::sqrt(2 * p * (1 - p) / kPerClass);
    double observed = 1 - r.fidelity;
    c.expect(std::abs(observed - expected) <= 3 * sigma,
             "1-F=" + fmt("%.5f", observed) + " vs 1-erf(3.3/sqrt 2)=" + fmt("%.5f", expected) +
                 " (3 sigma=" + fmt("%.5f", 3 * sigma) + ")");
    return c;
}

Check rb() {
    Check c;
    const std::vector<std::size_t> lengths{1, 5, 10, 20, 50, 100, 150, 200, 300};
    RbResult r = run_rb(0.005, lengths, 30, 400, kSeed);
    c.expect(!r.fit_failed && within(r.fitted_error_per_gate, 0.005, 0.0005),
             "recovered error per gate=" + fmt("%.4f%%", 100 * r.fitted_error_per_gate) + " (0.5 +/- 0.05)");
    return c;
}

Check properties() {
    Check c;
    ExperimentSetup ref = reference_setup(kSeed);

    {
        ExperimentSetup a = ref;
        ExperimentSetup b = ref;
        a.threads = 1;
        b.threads = 4;
        c.expect(run_fidelity(a, 4000) == run_fidelity(b, 4000), "identical results at 1 and 4 threads");
    }

    const DeviceParams dev = reference_device();
    const DerivedParams der = derive_params(dev);
    const double eps = calibrate_drive(24, dev, der, kDrive);
    {
        ReadoutPulse p = ReadoutPulse::constant(kDrive, eps, 3e-6);
        CavityPropagator prop(dev, der, kDrive, p.sample_dt);
        double worst = 0;
        for (QubitState q : {QubitState::ground, QubitState::excited}) {
            FieldTrajectory f = simulate_field(p, StatePath{q, {}}, dev, der);
            Complex ss = prop.steady_state(eps, q);
            worst = std::max(worst, std::abs(f.final_field() - ss) / std::abs(ss));
        }
        c.expect(worst <= 1e-9, "steady state rel err=" + fmt("%.1e", worst) + " (<= 1e-9)");
    }
    {
        Engine rng = make_engine(kSeed, 0x1111, 0);
        std::normal_distribution<double> unit;
        ReadoutPulse x = ReadoutPulse::constant(kDrive, 0.0, 200e-9);
        ReadoutPulse y = x;
        ReadoutPulse z = x;
        const Complex a(0.7, -1.3);
        const Complex b(-2.1, 0.4);
        for (std::size_t i = 0; i < x.envelope.size(); ++i) {
            x.envelope[i] = eps * Complex(unit(rng), unit(rng));
            y.envelope[i] = eps * Complex(unit(rng), unit(rng));
            z.envelope[i] = a * x.envelope[i] + b * y.envelope[i];
        }
        StatePath path{QubitState::excited, {80e-9}};
        auto fx = simulate_field(x, path, dev, der).samples;
        auto fy = simulate_field(y, path, dev, der).samples;
        auto fz = simulate_field(z, path, dev, der).samples;
        double worst = 0;
        double scale = 0;
        for (std::size_t i = 0; i < fz.size(); ++i) {
            worst = std::max(worst, std::abs(fz[i] - (a * fx[i] + b * fy[i])));
            scale = std::max(scale, std::abs(fz[i]));
        }
        c.expect(worst <= 1e-12 * scale, "linearity rel err=" + fmt("%.1e", worst / scale) + " (<= 1e-12)");
    }
    {
        FidelityResult r = run_fidelity(ref, 4000);
        const double gain = std::pow(10.0, ref.chain.power_gain_db / 20);
        std::vector<double> g = r.scores_g;
        std::vector<double> e = r.scores_e;
        for (auto* v : {&g, &e}) {
            for (double& x : *v) {
                x = gain * x + 0.37;
            }
        }
        DiscriminationReport scaled = compute_report(g, e, fit_threshold(g, e));
        DiscriminationReport plain = compute_report(r.scores_g, r.scores_e, fit_threshold(r.scores_g, r.scores_e));
        c.expect(scaled.error_g == plain.error_g && scaled.error_e == plain.error_e,
                 "fidelity unchanged under score gain " + fmt("%.0f", gain) + "x and offset");
    }
    {
        double frac = photon_depletion_fraction(300e-9, dev.cavity_linewidth_kappa);
        ReadoutPulse ring = ReadoutPulse::constant(kDrive, 0.0, 300e-9);
        CavityPropagator prop(dev, der, kDrive, ring.sample_dt);
        Complex start = prop.steady_state(eps, QubitState::ground);
        FieldTrajectory f = simulate_field(ring, StatePath{QubitState::ground, {}}, dev, der, start);
        double sim = std::norm(f.final_field()) / std::norm(start);
        c.expect(within(frac, 6.5e-9, 0.05e-9) && std::abs(sim / frac - 1) <= 1e-9,
                 "depletion after 300 ns=" + fmt("%.3e", frac) + ", simulated " + fmt("%.3e", sim));
    }
    {
        GaConfig cfg;
        cfg.population = 10;
        cfg.generations = 8;
        cfg.shots_per_eval = 600;
        ExperimentSetup s = ref;
        s.threads = 1;
        GaResult r = optimize_pulse(cfg, s, kSeed);
        bool monotone = std::is_sorted(r.history_best.begin(), r.history_best.end());
        c.expect(monotone, "GA best fitness non-decreasing over " + std::to_string(r.history_best.size()) +
                               " generations");
    }
    {
        GaConfig cfg;
        cfg.segments = 1;
        cfg.population = 10;
        cfg.generations = 10;
        cfg.shots_per_eval = 1000;
        cfg.max_amplitude_factor = 1.5;
        ExperimentSetup s = ref;
        s.threads = 1;
        PulseFitness fitness(cfg, s);
        constexpr std::uint64_t kCrn = 0x0c4a;
        constexpr std::size_t kOracleShots = 4000;
        double grid_best = -1;
        double grid_at = 0;
        constexpr int kGrid = 50;
        for (int i = 1; i <= kGrid; ++i) {
            double amp = cfg.max_amplitude_factor * i / kGrid;
            double f = fitness.evaluate(Genome{{Complex(amp, 0)}, 0.0}, kCrn, kOracleShots).fitness;
            if (f > grid_best) {
                grid_best = f;
                grid_at = amp;
            }
        }
        GaResult r = optimize_pulse(cfg, s, kSeed);
        double ga = fitness.evaluate(r.best_genome, kCrn, kOracleShots).fitness;
        c.expect(ga >= grid_best * 0.98, "1-segment GA fitness=" + fmt("%.4f", ga) + " vs grid best " +
                                             fmt("%.4f", grid_best) + " at amplitude x" + fmt("%.2f", grid_at) +
                                             " (within 2%)");
    }
    return c;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Check()> run;
    };
    const Criterion criteria[] = {
        {"derived constants", derived_constants},
        {"noise budget", noise_budget},
        {"SNR consistency", snr_consistency},
        {"fidelity", fidelity},
        {"post-selection", postselection},
        {"QND correlation", qnd},
        {"Gaussian bound", gaussian_bound},
        {"RB recovery", rb},
        {"property suite", properties},
    };
    int failures = 0;
    int index = 0;
    for (const auto& criterion : criteria) {
        ++index;
        auto t0 = std::chrono::steady_clock::now();
        Check c;
        try {
            c = criterion.run();
        } catch (const std::exception& e) {
            c.ok = false;
            c.detail = std::string("exception: ") + e.what();
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %d %s: %s (%.1f s)\n", c.ok ? "PASS" : "FAIL", index, criterion.name, c.detail.c_str(), secs);
        std::fflush(stdout);
        failures += c.ok ? 0 : 1;
    }
    return failures == 0 ? 0 : 1;
}
