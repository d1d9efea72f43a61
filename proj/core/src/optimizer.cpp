#include "readoutsim/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "readoutsim/io.hpp"
#include "readoutsim/parallel.hpp"
#include "readoutsim/rng.hpp"

namespace rsim {

void validate(const GaConfig& c) {
    if (c.population < 2) {
        throw std::invalid_argument("ga population must be >= 2");
    }
    if (c.elitism > c.population) {
        throw std::invalid_argument("ga elitism exceeds population");
    }
    if (c.segments < 1) {
        throw std::invalid_argument("ga segments must be >= 1");
    }
    if (c.shots_per_eval < 2) {
        throw std::invalid_argument("ga shots_per_eval must be >= 2");
    }
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    if (!prob(c.mutation_rate) || !prob(c.crossover_rate)) {
        throw std::invalid_argument("ga mutation_rate and crossover_rate must lie in [0, 1]");
    }
    if (!(c.mutation_scale >= 0) || !(c.init_spread >= 0)) {
        throw std::invalid_argument("ga mutation_scale and init_spread must be >= 0");
    }
    if (!(c.constraint_max_photons > 0) || !(c.max_amplitude_factor > 0) || !(c.drive_freq_span >= 0)) {
        throw std::invalid_argument("ga constraint, amplitude cap and frequency span must be positive");
    }
}

PulseFitness::PulseFitness(const GaConfig& config, const ExperimentSetup& setup)
    : config_(config), setup_(setup), derived_(derive_params(setup.device)) {
    validate(config_);
    if (setup_.pulse.envelope.size() < config_.segments) {
        throw std::invalid_argument("ga needs at least one pulse sample per segment");
    }
    double acc = 0;
    for (const auto& e : setup_.pulse.envelope) {
        acc += std::abs(e);
    }
    flat_amplitude_ = acc / static_cast<double>(setup_.pulse.envelope.size());
    if (!(flat_amplitude_ > 0)) {
        throw std::invalid_argument("ga reference pulse has zero amplitude");
    }
    setup_.threads = 1;
    setup_.optimize_window = config_.optimize_window;
    if (!config_.optimize_window) {
        setup_.filter.kind = FilterKind::boxcar;
        setup_.filter.window_start = 0.0;
        setup_.filter.window_length = setup_.pulse.duration();
        setup_.filter.weights.clear();
    }
}

Genome PulseFitness::flat() const { return Genome{std::vector<Complex>(config_.segments, Complex(1.0, 0.0)), 0.0}; }

ReadoutPulse PulseFitness::pulse(const Genome& genome) const {
    if (genome.genes.size() != config_.segments) {
        throw std::invalid_argument("genome has the wrong number of segments");
    }
    ReadoutPulse p = setup_.pulse;
    p.drive_freq += genome.freq_offset;
    const std::size_t n = p.envelope.size();
    const std::size_t s = config_.segments;
    for (std::size_t k = 0; k < s; ++k) {
        for (std::size_t i = k * n / s; i < (k + 1) * n / s; ++i) {
            p.envelope[i] = flat_amplitude_ * genome.genes[k];
        }
    }
    return p;
}

Evaluation PulseFitness::evaluate(const Genome& genome, std::uint64_t crn_seed, std::size_t shots) const {
    ExperimentSetup s = setup_;
    s.pulse = pulse(genome);
    s.seed = crn_seed;
    Evaluation ev;
    for (QubitState q : {QubitState::ground, QubitState::excited}) {
        FieldTrajectory f = simulate_field(s.pulse, StatePath{q, {}}, s.device, derived_);
        ev.max_photons = std::max(ev.max_photons, f.max_photons);
    }
    ev.fidelity = run_fidelity(s, shots).report.fidelity;
    double ratio = ev.max_photons / config_.constraint_max_photons;
    ev.feasible = ratio <= 1.0;
    ev.fitness = ev.feasible ? ev.fidelity : std::max(-1.0, ev.fidelity - (ratio - 1.0));
    return ev;
}

namespace {

struct Individual {
    Genome genome;
    Evaluation eval;
};

Complex clamp_gene(Complex g, double cap) {
    double r = std::abs(g);
    return r > cap ? g * (cap / r) : g;
}

}  // namespace

GaResult optimize_pulse(const GaConfig& config, const ExperimentSetup& setup, std::uint64_t seed) {
    PulseFitness fitness(config, setup);
    const std::uint64_t crn = stream_key(seed, streams::ga_fitness, 0);
    const std::size_t n_pop = config.population;
    GaResult result;

    auto evaluate_all = [&](std::vector<Individual>& pop, std::size_t from) {
        parallel_for(pop.size() - from, setup.threads, [&](std::size_t i) {
            pop[from + i].eval = fitness.evaluate(pop[from + i].genome, crn, config.shots_per_eval);
        });
        result.evaluations += pop.size() - from;
    };
    auto by_fitness = [](const Individual& a, const Individual& b) { return a.eval.fitness > b.eval.fitness; };

    Engine rng = make_engine(seed, streams::ga_operators, 0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Individual> pop(n_pop);
    pop[0].genome = fitness.flat();
    for (std::size_t i = 1; i < n_pop; ++i) {
        Genome g = fitness.flat();
        for (auto& x : g.genes) {
            x = clamp_gene(x + config.init_spread * Complex(normal(rng), normal(rng)), config.max_amplitude_factor);
        }
        if (config.optimize_drive_freq) {
            g.freq_offset = std::clamp(config.init_spread * config.drive_freq_span * normal(rng),
                                       -config.drive_freq_span, config.drive_freq_span);
        }
        pop[i].genome = std::move(g);
    }
    evaluate_all(pop, 0);

    Individual champion;
    bool have_champion = false;
    auto record = [&] {
        std::stable_sort(pop.begin(), pop.end(), by_fitness);
        double mean = 0;
        for (const auto& ind : pop) {
            mean += ind.eval.fitness;
        }
        result.history_best.push_back(pop.front().eval.fitness);
        result.history_mean.push_back(mean / static_cast<double>(n_pop));
        for (const auto& ind : pop) {
            if (ind.eval.feasible) {
                if (!have_champion || ind.eval.fitness > champion.eval.fitness) {
                    champion = ind;
                    have_champion = true;
                }
                break;
            }
        }
    };
    record();

    auto tournament = [&]() -> const Individual& {
        std::uniform_int_distribution<std::size_t> pick(0, n_pop - 1);
        std::size_t a = pick(rng);
        std::size_t b = pick(rng);
        // Sorted by fitness, so the lower index wins.
        return pop[std::min(a, b)];
    };

    for (std::size_t gen = 1; gen < config.generations; ++gen) {
        bool uniform = std::all_of(pop.begin(), pop.end(),
                                   [&](const Individual& ind) { return ind.genome == pop.front().genome; });
        if (uniform) {
            result.zero_diversity_stop = true;
            break;
        }
        std::vector<Individual> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(config.elitism));
        while (next.size() < n_pop) {
            const Individual& pa = tournament();
            const Individual& pb = tournament();
            Individual child{pa.genome, {}};
            if (unit(rng) < config.crossover_rate) {
                for (std::size_t k = 0; k < child.genome.genes.size(); ++k) {
                    if (unit(rng) < 0.5) {
                        child.genome.genes[k] = pb.genome.genes[k];
                    }
                }
                if (unit(rng) < 0.5) {
                    child.genome.freq_offset = pb.genome.freq_offset;
                }
            }
            for (auto& x : child.genome.genes) {
                if (unit(rng) < config.mutation_rate) {
                    double r = std::abs(x) + config.mutation_scale * normal(rng);
                    double phi = std::arg(x) + config.mutation_scale * normal(rng);
                    x = clamp_gene(std::polar(std::abs(r), phi), config.max_amplitude_factor);
                }
            }
            if (config.optimize_drive_freq && unit(rng) < config.mutation_rate) {
                child.genome.freq_offset =
                    std::clamp(child.genome.freq_offset + config.mutation_scale * config.drive_freq_span * normal(rng),
                               -config.drive_freq_span, config.drive_freq_span);
            }
            next.push_back(std::move(child));
        }
        pop = std::move(next);
        evaluate_all(pop, config.elitism);
        record();
    }
    result.generations_run = result.history_best.size();

    Individual winner = have_champion ? champion : pop.front();
    if (!winner.eval.feasible) {
        // Photon number is quadratic in the drive, so this scale lands just inside the constraint.
        double scale = std::sqrt(config.constraint_max_photons / winner.eval.max_photons) * (1.0 - 1e-9);
        for (auto& x : winner.genome.genes) {
            x *= scale;
        }
        result.winner_rescaled = true;
    }
    const std::uint64_t fresh = stream_key(seed, streams::ga_final, 0);
    const std::size_t final_shots = 4 * config.shots_per_eval;
    Evaluation final_eval = fitness.evaluate(winner.genome, fresh, final_shots);
    Evaluation baseline = fitness.evaluate(fitness.flat(), fresh, final_shots);
    result.evaluations += 2;
    result.best_genome = winner.genome;
    result.best_envelope = fitness.pulse(winner.genome);
    result.best_fitness = final_eval.fitness;
    result.best_max_photons = final_eval.max_photons;
    result.constraint_satisfied = final_eval.feasible;
    result.baseline_fitness = baseline.fitness;
    return result;
}

void write_history_csv(std::ostream& out, const GaResult& result) {
    CsvWriter csv(out, {"generation", "best_fitness", "mean_fitness"});
    for (std::size_t g = 0; g < result.history_best.size(); ++g) {
        csv.row(g, result.history_best[g], result.history_mean[g]);
    }
}

}  // namespace rsim
