#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "readoutsim/protocols.hpp"
#include "readoutsim/rng.hpp"
#include "readoutsim/trajectories.hpp"

using namespace rsim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ShotContext quiet_context(double n_noise = 3.2, bool noise = true) {
    ShotContext ctx;
    ctx.device = reference_device();
    ctx.device.t1 = kInf;
    ctx.derived = derive_params(ctx.device);
    ctx.prep = PreparationModel{0.0, 0.0, 40e-9};
    ctx.noise = NoiseModel{n_noise, 99, noise};
    ctx.chain = slug_chain();
    return ctx;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(trajectories, perfect_preparation) {
    Engine rng = make_engine(1, 2, 3);
    PreparationModel prep{0.0, 0.0, 40e-9};
    for (int i = 0; i < 1000; ++i) {
        EXPECT_EQ(sample_preparation(Intent::prepare_e, prep, rng), QubitState::excited);
        EXPECT_EQ(sample_preparation(Intent::prepare_g, prep, rng), QubitState::ground);
    }
}

TEST(trajectories, preparation_statistics) {
    const int n = 100000;
    PreparationModel prep{0.02, 0.005, 40e-9};
    Engine rng = make_engine(5, 0, 0);
    int excited_g = 0;
    int ground_e = 0;
    for (int i = 0; i < n; ++i) {
        excited_g += sample_preparation(Intent::prepare_g, prep, rng) == QubitState::excited;
        ground_e += sample_preparation(Intent::prepare_e, prep, rng) == QubitState::ground;
    }
    auto check = [&](int count, double p) {
        double sigma = std::sqrt(p * (1 - p) / n);
        EXPECT_NEAR(count / double(n), p, 3 * sigma);
    };
    check(excited_g, 0.02);
    // Thermal e flipped to g, or cold g left by a failed pi pulse.
    check(ground_e, 0.02 * 0.995 + 0.98 * 0.005);
}

TEST(trajectories, jump_rates) {
    JumpRates r = JumpRates::from(2.8e-6, 0.02);
    EXPECT_DOUBLE_EQ(r.down, 1 / 2.8e-6);
    EXPECT_DOUBLE_EQ(r.up / r.down, 0.02 / 0.98);
    JumpRates none = JumpRates::from(kInf, 0.5);
    EXPECT_EQ(none.down, 0.0);
    EXPECT_EQ(none.up, 0.0);
    EXPECT_THROW(JumpRates::from(1e-6, 1.0), std::invalid_argument);
    EXPECT_THROW(JumpRates::from(0.0, 0.0), std::invalid_argument);
}

TEST(trajectories, no_jumps_without_relaxation) {
    Engine rng = make_engine(0, 0, 0);
    EXPECT_TRUE(sample_jump_path(QubitState::excited, kInf, 0.02, 1.0, rng).jump_times.empty());
    EXPECT_THROW(sample_jump_path(QubitState::excited, 1e-6, 0.0, -1.0, rng), std::invalid_argument);
}

TEST(trajectories, exponential_survival) {
    const int n = 100000;
    Engine rng = make_engine(11, 0, 0);
    int survived_t1 = 0;
    int jumped_200ns = 0;
    for (int i = 0; i < n; ++i) {
        StatePath a = sample_jump_path(QubitState::excited, 2.8e-6, 0.0, 2.8e-6, rng);
        survived_t1 += a.jump_times.empty();
        StatePath b = sample_jump_path(QubitState::excited, 2.8e-6, 0.0, 200e-9, rng);
        jumped_200ns += !b.jump_times.empty();
        ASSERT_TRUE(a.valid_for(2.8e-6));
    }
    auto check = [&](int count, double p) {
        EXPECT_NEAR(count / double(n), p, 3 * std::sqrt(p * (1 - p) / n));
    };
    check(survived_t1, std::exp(-1.0));
    check(jumped_200ns, 1 - std::exp(-200e-9 / 2.8e-6));
    EXPECT_NEAR(1 - std::exp(-200e-9 / 2.8e-6), 0.069, 0.001);
}

TEST(trajectories, state_path_queries) {
    StatePath p{QubitState::excited, {10e-9, 30e-9}};
    EXPECT_EQ(p.state_at(5e-9), QubitState::excited);
    EXPECT_EQ(p.state_at(10e-9), QubitState::ground);
    EXPECT_EQ(p.state_at(40e-9), QubitState::excited);
    EXPECT_EQ(p.final_state(), QubitState::excited);
    EXPECT_EQ(*p.first_jump(), 10e-9);
    EXPECT_TRUE(p.valid_for(30e-9));
    EXPECT_FALSE(p.valid_for(20e-9));
}

TEST(trajectories, noiseless_records_are_deterministic_and_distinct) {
    ShotContext ctx = quiet_context(3.2, false);
    ReadoutPulse pulse = make_readout_pulse(ctx.device, 8.0762e9, 24, 200e-9);
    Shot g1 = generate_shot(0, Intent::prepare_g, pulse, ctx);
    Shot g2 = generate_shot(7, Intent::prepare_g, pulse, ctx);
    Shot e1 = generate_shot(1, Intent::prepare_e, pulse, ctx);
    EXPECT_EQ(g1.record(), g2.record());
    EXPECT_NE(g1.record(), e1.record());
    EXPECT_EQ(g1.record().size(), 200u);

    // Without noise the record is sqrt(kappa dt) alpha sampled after the pi-pulse slot.
    MeasurementSequence seq = standard_sequence(pulse, ctx.prep);
    FieldTrajectory f = simulate_field(pulse, StatePath{QubitState::ground, {}}, ctx.device, ctx.derived);
    const double scale = std::sqrt(angular(ctx.device.cavity_linewidth_kappa) * pulse.sample_dt);
    for (std::size_t k = 0; k < f.samples.size(); ++k) {
        EXPECT_NEAR(std::abs(g1.record()[k] - scale * f.samples[k]), 0.0, 1e-12);
    }
    EXPECT_DOUBLE_EQ(g1.readout_starts.front(), 40e-9);
    EXPECT_EQ(seq.readout_count(), 1u);
}

TEST(trajectories, shots_are_reproducible) {
    ShotContext ctx = quiet_context();
    ctx.device.t1 = 2.8e-6;
    ctx.prep = PreparationModel{};
    ReadoutPulse pulse = make_readout_pulse(ctx.device, 8.0762e9, 24, 200e-9);
    for (std::uint64_t i : {0ull, 5ull, 123456ull}) {
        Shot a = generate_shot(i, Intent::prepare_e, pulse, ctx);
        Shot b = generate_shot(i, Intent::prepare_e, pulse, ctx);
        EXPECT_EQ(a.record(), b.record());
        EXPECT_EQ(a.true_path.jump_times, b.true_path.jump_times);
    }
    ShotContext other = ctx;
    other.noise.seed = 100;
    EXPECT_NE(generate_shot(0, Intent::prepare_e, pulse, ctx).record(),
              generate_shot(0, Intent::prepare_e, pulse, other).record());
}

TEST(trajectories, integrated_noise_variance_and_normality) {
    ShotContext ctx = quiet_context(3.2, true);
    ReadoutPulse pulse = ReadoutPulse::constant(8.0762e9, Complex{}, 200e-9);
    const std::size_t n = 10000;
    const double s = ctx.noise.spectral_density();
    const double expected_var = s * 200.0;  // S per sample times the number of samples
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        Shot shot = generate_shot(i, Intent::prepare_g, pulse, ctx);
        q[i] = std::accumulate(shot.record().begin(), shot.record().end(), Complex{}).real();
    }
    double mean = std::accumulate(q.begin(), q.end(), 0.0) / n;
    double var = 0;
    for (double x : q) {
        var += (x - mean) * (x - mean);
    }
    var /= n - 1;
    // Var of the sample variance is 2 sigma^4 / (n - 1).
    EXPECT_NEAR(var, expected_var, 3 * expected_var * std::sqrt(2.0 / (n - 1)));
    EXPECT_NEAR(mean, 0.0, 3 * std::sqrt(expected_var / n));

    std::sort(q.begin(), q.end());
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double c = normal_cdf(q[i] / std::sqrt(expected_var));
        d = std::max({d, c - double(i) / n, double(i + 1) / n - c});
    }
    EXPECT_LT(d, 1.628 / std::sqrt(double(n)));  // Kolmogorov-Smirnov, 1% level
}

TEST(trajectories, multi_readout_sequence) {
    ShotContext ctx = quiet_context(3.2, false);
    ReadoutPulse pulse = make_readout_pulse(ctx.device, 8.0762e9, 24, 100e-9);
    MeasurementSequence seq;
    seq.start = MeasurementSequence::Start::equal_superposition;
    seq.steps = {step::Readout{pulse}, step::Idle{300e-9}, step::Readout{pulse}};
    EXPECT_DOUBLE_EQ(seq.duration(), 500e-9);
    EXPECT_EQ(seq.readout_count(), 2u);
    int excited = 0;
    for (std::uint64_t i = 0; i < 200; ++i) {
        Shot shot = generate_shot(i, Intent::prepare_g, seq, ctx);
        ASSERT_EQ(shot.records.size(), 2u);
        EXPECT_DOUBLE_EQ(shot.readout_starts[1], 400e-9);
        // The cavity rings down to exp(-kappa 300 ns / 2) ~ 1e-4 of its amplitude during the idle.
        for (std::size_t k = 0; k < pulse.envelope.size(); ++k) {
            EXPECT_NEAR(std::abs(shot.records[0][k] - shot.records[1][k]), 0.0, 2e-4);
        }
        excited += shot.initial_state == QubitState::excited;
    }
    EXPECT_GT(excited, 60);
    EXPECT_LT(excited, 140);
}

TEST(trajectories, shots_csv) {
    ShotContext ctx = quiet_context(3.2, false);
    ReadoutPulse pulse = make_readout_pulse(ctx.device, 8.0762e9, 24, 20e-9);
    std::vector<Shot> shots{generate_shot(0, Intent::prepare_g, pulse, ctx),
                            generate_shot(1, Intent::prepare_e, pulse, ctx)};
    std::ostringstream out;
    write_shots_csv(out, shots);
    EXPECT_EQ(out.str(), "index,intent,initial_state,first_jump_time\n0,prepare_g,g,\n1,prepare_e,g,\n");
}

TEST(trajectories, swapping_amplifier_chains_costs_the_noise_ratio) {
    ExperimentSetup s = reference_setup(3);
    s.device.t1 = kInf;
    s.prep = PreparationModel{0.0, 0.0, 40e-9};
    s.pulse = make_readout_pulse(s.device, 8.0762e9, 24, 400e-9);
    s.optimize_window = false;
    s.filter.window_start = 200e-9;
    s.filter.window_length = 200e-9;
    double slug = run_fidelity(s, 20000).report.snr_meas;
    s.chain = hemt_chain();
    double hemt = run_fidelity(s, 20000).report.snr_meas;
    EXPECT_NEAR(20 * std::log10(slug / hemt), 6.7, 0.3);
}
