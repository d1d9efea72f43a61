#include "app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "readoutsim/io.hpp"
#include "readoutsim/json.hpp"
#include "readoutsim/optimizer.hpp"

namespace rsim::cli {

namespace {

struct Options {
    std::string config;
    std::optional<std::size_t> shots;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool strict = false;
    std::optional<std::string> output_dir;

    std::string sweep_param;
    double sweep_from = 0.0;
    double sweep_to = 0.0;
    std::size_t sweep_steps = 100;

    std::string defaults_output;
};

struct Outcome {
    std::string summary;
    bool flagged = false;
};

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

std::uint64_t resolve_seed(const RunConfig& config, const Options& opts) {
    if (opts.seed) {
        return *opts.seed;
    }
    if (const char* env = std::getenv("REPRO_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        errno = 0;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || env[0] == '-') {
            throw ConfigError(std::string("REPRO_SEED is not an unsigned integer: '") + env + "'");
        }
        return v;
    }
    return config.seed;
}

class RunDirectory {
   public:
    explicit RunDirectory(std::filesystem::path path) : path_(std::move(path)) {
        std::filesystem::create_directories(path_);
    }

    const std::filesystem::path& path() const { return path_; }

    std::ofstream open(const std::string& name) const {
        std::ofstream f(path_ / name, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot write " + (path_ / name).string());
        }
        return f;
    }

    void write_json(const std::string& name, const Json& j) const {
        auto f = open(name);
        f << j.dump(2) << '\n';
    }

   private:
    std::filesystem::path path_;
};

Json setup_json(const RunConfig& config, const ExperimentSetup& setup) {
    return Json{{"device", setup.device},
                {"chain_profile", config.chain_profile},
                {"chain", setup.chain},
                {"preparation", setup.prep},
                {"pulse", setup.pulse},
                {"filter", setup.filter},
                {"optimize_window", setup.optimize_window},
                {"optimize_phase", setup.optimize_phase},
                {"window_grid_s", setup.window_grid},
                {"histogram_bins", setup.histogram_bins}};
}

Json metadata(Protocol protocol, std::uint64_t seed, std::size_t shots) {
    return Json{{"program", "readoutsim"},
                {"version", READOUTSIM_VERSION},
                {"protocol", to_string(protocol)},
                {"seed", seed},
                {"shots", shots},
                {"generated_at_utc", utc_timestamp()}};
}

std::string flag_text(const PhysicsFlags& f) {
    if (!f.any()) {
        return "none";
    }
    return "over_ncrit=" + std::to_string(f.shots_over_ncrit) +
           " over_saturation=" + std::to_string(f.shots_over_saturation);
}

void write_scores_csv(std::ostream& out, const FidelityResult& r) {
    CsvWriter csv(out, {"intent", "score"});
    for (double s : r.scores_g) {
        csv.row("g", s);
    }
    for (double s : r.scores_e) {
        csv.row("e", s);
    }
}

Outcome do_fidelity(const RunConfig& config, const ExperimentSetup& setup, std::size_t shots, Json& report,
                    const RunDirectory& dir) {
    FidelityResult r = run_fidelity(setup, shots);
    report["result"] = r;
    report["result"]["gaussian_fidelity_bound"] = gaussian_fidelity_bound(r.report.snr_meas);
    auto h = dir.open("histogram.csv");
    write_histogram_csv(h, r.histogram);
    auto s = dir.open("scores.csv");
    write_scores_csv(s, r);
    (void)config;
    return {"fidelity F=" + fixed(r.report.fidelity, 4) + " error_g=" + fixed(r.report.error_g, 4) +
                " error_e=" + fixed(r.report.error_e, 4) + " snr=" + fixed(r.report.snr_meas, 3) +
                " flags=" + flag_text(r.flags),
            r.flags.any()};
}

Outcome do_qnd(const RunConfig& config, const ExperimentSetup& setup, std::size_t shots, Json& report,
               const RunDirectory& dir) {
    QndResult r = run_qnd(setup, *config.qnd_delays, shots);
    report["result"] = r;
    auto f = dir.open("qnd.csv");
    CsvWriter csv(f, {"delay_s", "p_gg", "p_ee", "p_gg_state", "p_ee_state", "conditioned_g", "conditioned_e"});
    for (std::size_t i = 0; i < r.delays.size(); ++i) {
        csv.row(r.delays[i], r.p_gg[i], r.p_ee[i], r.p_gg_state[i], r.p_ee_state[i], r.conditioned_g[i],
                r.conditioned_e[i]);
    }
    std::string summary = "qnd P_gg(0)=" + fixed(r.p_gg.front(), 4) + " P_ee(0)=" + fixed(r.p_ee.front(), 4);
    if (r.fits_valid) {
        summary += " tau_ee=" + fixed(r.fit_ee.decay_time * 1e6, 3) + "us";
    } else {
        summary += " fit=invalid";
    }
    summary += " flags=" + flag_text(r.flags);
    return {summary, r.flags.any()};
}

Outcome do_postselect(const RunConfig& config, const ExperimentSetup& setup, std::size_t shots, Json& report,
                      const RunDirectory& dir) {
    PostSelectionResult r = run_postselection(setup, shots, *config.postselect);
    report["result"] = r;
    auto raw = dir.open("histogram_raw.csv");
    write_histogram_csv(raw, r.raw_histogram);
    auto sel = dir.open("histogram_selected.csv");
    write_histogram_csv(sel, r.selected_histogram);
    return {"postselect F_raw=" + fixed(r.raw.fidelity, 4) + " F_selected=" + fixed(r.selected.fidelity, 4) +
                " error_g_selected=" + fixed(r.selected.error_g, 4) +
                " discard=" + fixed(r.discard_fraction, 4) + " flags=" + flag_text(r.flags),
            r.flags.any()};
}

Outcome do_rb(const RunConfig& config, std::uint64_t seed, unsigned threads, Json& report, const RunDirectory& dir) {
    const RbConfig& rb = *config.rb;
    RbResult r = run_rb(rb.gate_error, rb.sequence_lengths, rb.sequences, rb.shots_per_sequence, seed, threads);
    report["result"] = r;
    auto f = dir.open("rb.csv");
    CsvWriter csv(f, {"sequence_length", "survival"});
    for (std::size_t i = 0; i < r.sequence_lengths.size(); ++i) {
        csv.row(r.sequence_lengths[i], r.survival[i]);
    }
    return {"rb error_per_gate=" + fixed(r.fitted_error_per_gate, 5) + " p=" + fixed(r.fit_decay, 5) +
                (r.fit_failed ? " fit=failed" : ""),
            false};
}

Outcome do_optimize(const RunConfig& config, const ExperimentSetup& setup, std::uint64_t seed, Json& report,
                    const RunDirectory& dir) {
    GaResult r = optimize_pulse(config.ga, setup, seed);
    report["ga_config"] = config.ga;
    report["result"] = r;
    auto h = dir.open("history.csv");
    write_history_csv(h, r);
    auto e = dir.open("envelope.csv");
    CsvWriter csv(e, {"t_s", "re_drive", "im_drive"});
    for (std::size_t i = 0; i < r.best_envelope.envelope.size(); ++i) {
        const Complex z = r.best_envelope.envelope[i];
        csv.row(static_cast<double>(i) * r.best_envelope.sample_dt, z.real(), z.imag());
    }
    bool flagged = !r.constraint_satisfied || r.best_max_photons > setup.chain.saturation_photons;
    return {"optimize best=" + fixed(r.best_fitness, 4) + " baseline=" + fixed(r.baseline_fitness, 4) +
                " max_photons=" + fixed(r.best_max_photons, 2) + " generations=" + std::to_string(r.generations_run) +
                (r.winner_rescaled ? " rescaled" : "") + (flagged ? " flags=constraint" : " flags=none"),
            flagged};
}

struct SweepParam {
    const char* column;
    double scale;
};

SweepParam sweep_param(const std::string& name) {
    if (name == "n_bar") {
        return {"n_bar", 1.0};
    }
    if (name == "drive_freq") {
        return {"drive_freq_ghz", 1e9};
    }
    if (name == "tau") {
        return {"t_meas_ns", 1e-9};
    }
    throw ConfigError("--param must be n_bar, drive_freq or tau, not '" + name + "'");
}

RunConfig sweep_point(RunConfig config, const std::string& param, double value) {
    if (param == "n_bar") {
        config.readout.n_bar = value;
        config.readout.envelope.clear();
    } else if (param == "drive_freq") {
        config.readout.drive_freq = value;
    } else {
        config.readout.t_meas = value;
        config.readout.filter.window_start = 0.0;
        config.readout.filter.window_length = value;
    }
    return config;
}

Outcome do_sweep(const RunConfig& config, const Options& opts, std::uint64_t seed, std::size_t shots, Json& report,
                 const RunDirectory& dir) {
    SweepParam p = sweep_param(opts.sweep_param);
    if (opts.sweep_steps == 0) {
        throw ConfigError("--steps must be >= 1");
    }
    if (!std::isfinite(opts.sweep_from) || !std::isfinite(opts.sweep_to)) {
        throw ConfigError("--from and --to must be finite");
    }
    auto out = dir.open("sweep.csv");
    CsvWriter csv(out, {p.column, "fidelity", "error_g", "error_e", "snr_meas", "snr_core", "max_photons",
                        "shots_over_ncrit", "shots_over_saturation", "flagged"});
    Json points = Json::array();
    std::optional<std::size_t> best;
    std::vector<double> fidelities;
    bool any_flagged = false;
    for (std::size_t i = 0; i < opts.sweep_steps; ++i) {
        double v = opts.sweep_steps == 1
                       ? opts.sweep_from
                       : opts.sweep_from + (opts.sweep_to - opts.sweep_from) * static_cast<double>(i) /
                                               static_cast<double>(opts.sweep_steps - 1);
        RunConfig point = sweep_point(config, opts.sweep_param, v * p.scale);
        point.seed = seed;
        ExperimentSetup setup = make_setup(point, opts.threads);
        FidelityResult r = run_fidelity(setup, shots);
        const DiscriminationReport& d = r.report;
        bool flagged = r.flags.any();
        any_flagged = any_flagged || flagged;
        csv.row(v, d.fidelity, d.error_g, d.error_e, d.snr_meas, d.snr_core, r.flags.max_photons,
                r.flags.shots_over_ncrit, r.flags.shots_over_saturation, flagged);
        points.push_back(Json{{"value", v}, {"report", d}, {"flags", r.flags}, {"filter", r.readout.filter}});
        if (!flagged && (!best || d.fidelity > fidelities[*best])) {
            best = i;
        }
        fidelities.push_back(d.fidelity);
    }
    report["sweep"] = Json{{"param", opts.sweep_param},
                           {"column", p.column},
                           {"from", opts.sweep_from},
                           {"to", opts.sweep_to},
                           {"steps", opts.sweep_steps}};
    report["result"] = Json{{"points", points}, {"best_unflagged_index", nullptr}};
    std::string summary = "sweep " + opts.sweep_param + " points=" + std::to_string(opts.sweep_steps);
    if (best) {
        report["result"]["best_unflagged_index"] = *best;
        summary += " best_unflagged=" + format_double(points[*best]["value"].get<double>()) +
                   " F=" + fixed(fidelities[*best], 4);
    } else {
        summary += " best_unflagged=none";
    }
    summary += any_flagged ? " flags=some" : " flags=none";
    return {summary, any_flagged};
}

int execute(Protocol protocol, const Options& opts, std::ostream& out, std::ostream& err) {
    RunConfig config = load_config(opts.config);
    require_protocol(config, protocol);
    const std::uint64_t seed = resolve_seed(config, opts);
    config.seed = seed;
    const std::size_t shots = opts.shots.value_or(config.shots);
    if (opts.output_dir) {
        config.output_dir = *opts.output_dir;
    }

    std::string leaf = to_string(protocol);
    if (protocol == Protocol::sweep) {
        leaf += "-" + opts.sweep_param;
    }
    leaf += "-seed" + std::to_string(seed);

    Json report;
    report["metadata"] = metadata(protocol, seed, shots);
    Outcome outcome;
    if (protocol == Protocol::rb) {
        RunDirectory dir(config.output_dir / leaf);
        report["rb"] = Json{{"gate_error", config.rb->gate_error},
                            {"sequence_lengths", config.rb->sequence_lengths},
                            {"sequences", config.rb->sequences},
                            {"shots_per_sequence", config.rb->shots_per_sequence}};
        outcome = do_rb(config, seed, opts.threads, report, dir);
        dir.write_json("report.json", report);
        out << outcome.summary << " -> " << (dir.path() / "report.json").string() << '\n';
    } else {
        if (protocol == Protocol::sweep) {
            sweep_param(opts.sweep_param);
        }
        ExperimentSetup setup = make_setup(config, opts.threads);
        if (shots < 2 && protocol != Protocol::optimize) {
            throw ConfigError("shots must be >= 2");
        }
        RunDirectory dir(config.output_dir / leaf);
        report["setup"] = setup_json(config, setup);
        switch (protocol) {
            case Protocol::fidelity:
                outcome = do_fidelity(config, setup, shots, report, dir);
                break;
            case Protocol::qnd:
                outcome = do_qnd(config, setup, shots, report, dir);
                break;
            case Protocol::postselect:
                report["postselect"] = *config.postselect;
                outcome = do_postselect(config, setup, shots, report, dir);
                break;
            case Protocol::optimize:
                outcome = do_optimize(config, setup, seed, report, dir);
                break;
            case Protocol::sweep:
                outcome = do_sweep(config, opts, seed, shots, report, dir);
                break;
            case Protocol::rb:
                break;
        }
        dir.write_json("report.json", report);
        out << outcome.summary << " -> " << (dir.path() / "report.json").string() << '\n';
    }
    if (opts.strict && outcome.flagged) {
        err << "strict: physics flags raised; see report.json\n";
        return kExitPhysicsFlag;
    }
    return kExitOk;
}

void add_run_options(CLI::App* sub, Options& opts) {
    sub->add_option("--config", opts.config, "YAML run configuration (see `readoutsim paper-defaults`)");
    sub->add_option("--shots", opts.shots, "Total shots; overrides run.shots");
    sub->add_option("--seed", opts.seed, "Seed; overrides REPRO_SEED and run.seed");
    sub->add_option("--threads", opts.threads, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_flag("--strict", opts.strict, "Exit 3 when physics flags are raised");
    sub->add_option("--output-dir", opts.output_dir, "Overrides run.output_dir");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dispersive qubit readout simulator", "readoutsim"};
    app.require_subcommand(1);
    Options opts;

    struct Entry {
        Protocol protocol;
        const char* help;
    };
    const Entry entries[] = {
        {Protocol::fidelity, "Combined preparation and readout fidelity"},
        {Protocol::qnd, "Repeated measurements after a pi/2 pulse"},
        {Protocol::postselect, "Fidelity with heralding pre-measurement"},
        {Protocol::rb, "Randomized benchmarking with a depolarizing gate error"},
        {Protocol::optimize, "Genetic search over readout envelopes"},
        {Protocol::sweep, "Fidelity along one readout parameter"},
    };
    std::vector<std::pair<Protocol, CLI::App*>> subs;
    for (const Entry& e : entries) {
        CLI::App* sub = app.add_subcommand(to_string(e.protocol), e.help);
        add_run_options(sub, opts);
        subs.emplace_back(e.protocol, sub);
    }
    CLI::App* sweep = subs.back().second;
    sweep->add_option("--param", opts.sweep_param, "n_bar (photons), drive_freq (GHz) or tau (measurement ns)")
        ->required();
    sweep->add_option("--from", opts.sweep_from, "First value")->required();
    sweep->add_option("--to", opts.sweep_to, "Last value")->required();
    sweep->add_option("--steps", opts.sweep_steps, "Number of evenly spaced points")->capture_default_str();

    CLI::App* defaults = app.add_subcommand("paper-defaults", "Print the measured-device configuration");
    defaults->add_option("--output", opts.defaults_output, "Write to this file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        const CLI::App* failed = &app;
        for (const auto& [p, sub] : subs) {
            if (sub->parsed()) {
                failed = sub;
            }
        }
        err << failed->help();
        return kExitUsage;
    }

    try {
        if (defaults->parsed()) {
            if (opts.defaults_output.empty()) {
                out << paper_defaults();
            } else {
                std::ofstream f(opts.defaults_output, std::ios::binary | std::ios::trunc);
                if (!f) {
                    err << "error: cannot write " << opts.defaults_output << '\n';
                    return kExitFailure;
                }
                f << paper_defaults();
            }
            return kExitOk;
        }
        for (const auto& [protocol, sub] : subs) {
            if (!sub->parsed()) {
                continue;
            }
            if (opts.config.empty()) {
                err << "error: --config is required\n\n" << sub->help();
                return kExitUsage;
            }
            return execute(protocol, opts, out, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace rsim::cli
