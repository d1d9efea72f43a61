#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "readoutsim/parallel.hpp"
#include "readoutsim/protocols.hpp"
#include "readoutsim/rng.hpp"

namespace rsim {

RbResult run_rb(double gate_error, std::span<const std::size_t> sequence_lengths, std::size_t n_sequences,
                std::size_t shots_per_sequence, std::uint64_t seed, unsigned threads) {
    if (!(gate_error >= 0 && gate_error <= 0.5)) {
        throw std::invalid_argument("rb gate_error must lie in [0, 0.5]");
    }
    if (sequence_lengths.size() < 4) {
        throw std::invalid_argument("rb needs at least 4 sequence lengths");
    }
    for (std::size_t i = 1; i < sequence_lengths.size(); ++i) {
        if (sequence_lengths[i] <= sequence_lengths[i - 1]) {
            throw std::invalid_argument("rb sequence lengths must be strictly ascending");
        }
    }
    if (n_sequences == 0 || shots_per_sequence == 0) {
        throw std::invalid_argument("rb needs at least one sequence and one shot");
    }

    // Average gate error r of a depolarizing channel rho -> (1 - d) rho + d I/2 is d / 2.
    const double depolarize = 2.0 * gate_error;
    const std::size_t n_lengths = sequence_lengths.size();
    std::vector<double> per_sequence(n_lengths * n_sequences);
    parallel_for(per_sequence.size(), threads, [&](std::size_t job) {
        std::size_t l = job / n_sequences;
        std::size_t m = sequence_lengths[l];
        Engine rng = make_engine(seed, streams::rb, job);
        std::bernoulli_distribution hit(depolarize);
        std::bernoulli_distribution coin(0.5);
        std::size_t survived = 0;
        for (std::size_t s = 0; s < shots_per_sequence; ++s) {
            bool mixed = false;
            for (std::size_t g = 0; g < m && !mixed; ++g) {
                mixed = hit(rng);
            }
            // The inversion gate returns an unscrambled state to |0>; a depolarized one reads 0 half the time.
            survived += (!mixed || coin(rng)) ? 1 : 0;
        }
        per_sequence[job] = static_cast<double>(survived) / static_cast<double>(shots_per_sequence);
    });

    RbResult r;
    r.sequence_lengths.assign(sequence_lengths.begin(), sequence_lengths.end());
    r.survival.resize(n_lengths);
    for (std::size_t l = 0; l < n_lengths; ++l) {
        double acc = 0;
        for (std::size_t q = 0; q < n_sequences; ++q) {
            acc += per_sequence[l * n_sequences + q];
        }
        r.survival[l] = acc / static_cast<double>(n_sequences);
    }

    auto [lo, hi] = std::minmax_element(r.survival.begin(), r.survival.end());
    if (*hi - *lo == 0.0) {
        // No decay visible at all.
        r.fit_amplitude = 0.0;
        r.fit_decay = 1.0;
        r.fit_offset = *lo;
        r.fitted_error_per_gate = 0.0;
        return r;
    }

    std::vector<double> x(n_lengths);
    std::transform(sequence_lengths.begin(), sequence_lengths.end(), x.begin(),
                   [](std::size_t m) { return static_cast<double>(m); });
    ExponentialFit fit = fit_exponential(x, r.survival);
    r.fit_amplitude = fit.amplitude;
    r.fit_decay = std::exp(-1.0 / fit.decay_time);
    r.fit_offset = fit.offset;
    r.fitted_error_per_gate = (1.0 - r.fit_decay) / 2.0;
    // A pin at the short end is a legitimate p -> 0 (fully depolarizing) fit.
    r.fit_failed = fit.pinned && fit.decay_time > x.back() - x.front();
    return r;
}

}  // namespace rsim
