#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace rsim::cli {

const char* to_string(Protocol p) {
    switch (p) {
        case Protocol::fidelity:
            return "fidelity";
        case Protocol::qnd:
            return "qnd";
        case Protocol::postselect:
            return "postselect";
        case Protocol::rb:
            return "rb";
        case Protocol::optimize:
            return "optimize";
        case Protocol::sweep:
            return "sweep";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(const std::string& name) {
    for (Protocol p : {Protocol::fidelity, Protocol::qnd, Protocol::postselect, Protocol::rb, Protocol::optimize,
                       Protocol::sweep}) {
        if (name == to_string(p)) {
            return p;
        }
    }
    return std::nullopt;
}

namespace {

// Decimal text times 10^exp10, rounded once.
double scaled_decimal(const std::string& text, int exp10) {
    std::string mantissa = text;
    long exponent = exp10;
    if (auto e = text.find_first_of("eE"); e != std::string::npos) {
        mantissa = text.substr(0, e);
        exponent += std::stol(text.substr(e + 1));
    }
    std::string shifted = mantissa + "e" + std::to_string(exponent);
    char* end = nullptr;
    double v = std::strtod(shifted.c_str(), &end);
    if (end != shifted.c_str() + shifted.size()) {
        throw std::invalid_argument(text);
    }
    return v;
}

// A mapping node restricted to a fixed set of keys.
class Section {
   public:
    Section(YAML::Node node, std::string path, std::initializer_list<const char*> allowed)
        : Section(std::move(node), std::move(path)) {
        for (const auto& kv : node_) {
            std::string key = kv.first.as<std::string>();
            if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) ==
                allowed.end()) {
                throw ConfigError("unknown key '" + key_path(key) + "'");
            }
        }
    }

    // Any key accepted.
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (!node_.IsMap()) {
            throw ConfigError("'" + path_ + "' must be a mapping");
        }
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return static_cast<bool>(node_[key]); }

    template <typename T>
    T get(const std::string& key) {
        YAML::Node v = node(key);
        try {
            return v.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError("bad value for '" + key_path(key) + "'");
        }
    }

    template <typename T>
    T get_or(const std::string& key, T fallback) {
        return has(key) ? get<T>(key) : fallback;
    }

    /// Number in the unit named by the key, converted with an exact decimal shift.
    double number(const std::string& key, int exp10 = 0) { return scalar_number(node(key), key, exp10); }

    /// Sequence of numbers, each converted like number().
    std::vector<double> numbers(const std::string& key, int exp10 = 0) {
        YAML::Node v = node(key);
        if (!v.IsSequence()) {
            throw ConfigError("'" + key_path(key) + "' must be a list");
        }
        std::vector<double> out;
        for (const auto& item : v) {
            out.push_back(scalar_number(item, key, exp10));
        }
        return out;
    }

    /// Sequence of [re, im] pairs.
    std::vector<Complex> complex_numbers(const std::string& key, int exp10 = 0) {
        YAML::Node v = node(key);
        if (!v.IsSequence()) {
            throw ConfigError("'" + key_path(key) + "' must be a list of [re, im] pairs");
        }
        std::vector<Complex> out;
        for (const auto& item : v) {
            if (!item.IsSequence() || item.size() != 2) {
                throw ConfigError("'" + key_path(key) + "' entries must be [re, im] pairs");
            }
            out.emplace_back(scalar_number(item[0], key, exp10), scalar_number(item[1], key, exp10));
        }
        return out;
    }

    double positive(const std::string& key, int exp10 = 0) {
        double v = number(key, exp10);
        if (!(v > 0) || !std::isfinite(v)) {
            throw ConfigError("'" + key_path(key) + "' must be a finite value > 0");
        }
        return v;
    }

    double non_negative(const std::string& key, int exp10 = 0) {
        double v = number(key, exp10);
        if (!(v >= 0) || !std::isfinite(v)) {
            throw ConfigError("'" + key_path(key) + "' must be a finite value >= 0");
        }
        return v;
    }

    double probability(const std::string& key) {
        double v = number(key);
        if (!(v >= 0 && v <= 1)) {
            throw ConfigError("'" + key_path(key) + "' must lie in [0, 1]");
        }
        return v;
    }

    std::size_t count(const std::string& key) {
        long long v = get<long long>(key);
        if (v < 0) {
            throw ConfigError("'" + key_path(key) + "' must be >= 0");
        }
        return static_cast<std::size_t>(v);
    }

    Section section(const std::string& key, std::initializer_list<const char*> allowed) {
        return Section(node(key), key_path(key), allowed);
    }

    Section open_section(const std::string& key) { return Section(node(key), key_path(key)); }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& kv : node_) {
            out.push_back(kv.first.as<std::string>());
        }
        return out;
    }

   private:
    double scalar_number(const YAML::Node& v, const std::string& key, int exp10) const {
        try {
            if (!v.IsScalar()) {
                throw std::invalid_argument(key);
            }
            double plain = v.as<double>();
            return std::isfinite(plain) ? scaled_decimal(v.Scalar(), exp10) : plain;
        } catch (const std::exception&) {
            throw ConfigError("bad value for '" + key_path(key) + "'");
        }
    }

    YAML::Node node(const std::string& key) const {
        YAML::Node v = node_[key];
        if (!v) {
            throw ConfigError("missing key '" + key_path(key) + "'");
        }
        return v;
    }

    YAML::Node node_;
    std::string path_;
};

DeviceParams parse_device(Section s) {
    DeviceParams d;
    d.cavity_freq = s.positive("cavity_freq_ghz", 9);
    d.cavity_linewidth_kappa = s.positive("cavity_linewidth_mhz", 6);
    d.qubit_freq = s.positive("qubit_freq_ghz", 9);
    d.anharmonicity = s.positive("anharmonicity_mhz", 6);
    d.coupling_g = s.positive("coupling_g_mhz", 6);
    d.t1 = s.number("t1_us", -6);
    d.t2_star = s.positive("t2_star_us", -6);
    if (s.has("chi_override_mhz")) {
        d.chi_override = s.number("chi_override_mhz", 6);
    }
    d.ground_shift_positive = s.get_or("ground_shift_positive", true);
    try {
        validate(d);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("device: ") + e.what());
    }
    return d;
}

AmplifierChain parse_chain(Section s, double qubit_freq) {
    AmplifierChain c;
    bool by_photons = s.has("noise_photons");
    bool by_temperature = s.has("noise_temperature_k");
    if (by_photons == by_temperature) {
        throw ConfigError("'" + s.key_path("") + "' needs exactly one of noise_photons and noise_temperature_k");
    }
    c.noise_photons = by_photons ? s.non_negative("noise_photons")
                                 : noise_photons_from_temperature(s.non_negative("noise_temperature_k"), qubit_freq);
    c.power_gain_db = s.number("power_gain_db");
    c.saturation_photons = s.positive("saturation_photons");
    return c;
}

ReadoutConfig parse_readout(Section s) {
    ReadoutConfig r;
    r.drive_freq = s.positive("drive_freq_ghz", 9);
    r.t_meas = s.positive("t_meas_ns", -9);
    r.sample_dt = s.has("sample_dt_ns") ? s.positive("sample_dt_ns", -9) : kDefaultSampleDt;
    bool has_n = s.has("n_bar");
    bool has_env = s.has("envelope_sqrt_photons_per_us");
    if (has_n == has_env) {
        throw ConfigError("'readout' needs exactly one of n_bar and envelope_sqrt_photons_per_us");
    }
    if (has_n) {
        r.n_bar = s.non_negative("n_bar");
    } else {
        r.envelope = s.complex_numbers("envelope_sqrt_photons_per_us", 6);
        if (r.envelope.empty()) {
            throw ConfigError("'readout.envelope_sqrt_photons_per_us' is empty");
        }
    }
    std::string kind = s.get<std::string>("filter");
    if (kind == "boxcar") {
        r.filter.kind = FilterKind::boxcar;
    } else if (kind == "matched") {
        r.filter.kind = FilterKind::matched;
    } else {
        throw ConfigError("'readout.filter' must be boxcar or matched, not '" + kind + "'");
    }
    r.filter.window_start = s.non_negative("window_start_ns", -9);
    r.filter.window_length = s.positive("window_length_ns", -9);
    r.optimize_window = s.get<bool>("optimize_window");
    r.optimize_phase = s.get<bool>("optimize_phase");
    r.window_grid = s.has("window_grid_ns") ? s.positive("window_grid_ns", -9) : 5e-9;
    r.histogram_bins = s.has("histogram_bins") ? s.count("histogram_bins") : 200;
    if (r.filter.window_start + r.filter.window_length > r.t_meas * (1 + 1e-12)) {
        throw ConfigError("'readout' window extends past t_meas_ns");
    }
    return r;
}

GaConfig parse_ga(Section s) {
    GaConfig g;
    g.population = s.has("population") ? s.count("population") : g.population;
    g.generations = s.has("generations") ? s.count("generations") : g.generations;
    g.mutation_rate = s.has("mutation_rate") ? s.probability("mutation_rate") : g.mutation_rate;
    g.mutation_scale = s.has("mutation_scale") ? s.non_negative("mutation_scale") : g.mutation_scale;
    g.crossover_rate = s.has("crossover_rate") ? s.probability("crossover_rate") : g.crossover_rate;
    g.elitism = s.has("elitism") ? s.count("elitism") : g.elitism;
    g.segments = s.has("segments") ? s.count("segments") : g.segments;
    g.shots_per_eval = s.has("shots_per_eval") ? s.count("shots_per_eval") : g.shots_per_eval;
    g.constraint_max_photons =
        s.has("constraint_max_photons") ? s.positive("constraint_max_photons") : g.constraint_max_photons;
    g.init_spread = s.has("init_spread") ? s.non_negative("init_spread") : g.init_spread;
    g.max_amplitude_factor =
        s.has("max_amplitude_factor") ? s.positive("max_amplitude_factor") : g.max_amplitude_factor;
    g.optimize_drive_freq = s.get_or("optimize_drive_freq", g.optimize_drive_freq);
    g.drive_freq_span = s.has("drive_freq_span_mhz") ? s.non_negative("drive_freq_span_mhz", 6) : g.drive_freq_span;
    g.optimize_window = s.get_or("optimize_window", g.optimize_window);
    try {
        validate(g);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("optimize: ") + e.what());
    }
    return g;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("config is not valid YAML: ") + e.what());
    }
    if (!root || root.IsNull()) {
        throw ConfigError("config is empty");
    }
    Section top(root, "",
                {"protocol", "run", "device", "chain", "preparation", "readout", "qnd", "postselect", "rb", "optimize"});
    RunConfig c;

    if (top.has("protocol")) {
        std::string name = top.get<std::string>("protocol");
        c.protocol = parse_protocol(name);
        if (!c.protocol) {
            throw ConfigError("unknown protocol '" + name + "'");
        }
    }

    Section run = top.section("run", {"seed", "shots", "output_dir"});
    c.seed = run.get<std::uint64_t>("seed");
    c.shots = run.count("shots");
    c.output_dir = run.get<std::string>("output_dir");

    c.device = parse_device(top.section("device", {"cavity_freq_ghz", "cavity_linewidth_mhz", "qubit_freq_ghz",
                                                     "anharmonicity_mhz", "coupling_g_mhz", "t1_us", "t2_star_us",
                                                     "chi_override_mhz", "ground_shift_positive"}));

    Section chain = top.section("chain", {"profile", "profiles"});
    c.chain_profile = chain.get<std::string>("profile");
    Section profiles = chain.open_section("profiles");
    for (const std::string& name : profiles.keys()) {
        c.chains[name] = parse_chain(
            profiles.section(name, {"noise_photons", "noise_temperature_k", "power_gain_db", "saturation_photons"}),
            c.device.qubit_freq);
    }
    if (!c.chains.count(c.chain_profile)) {
        throw ConfigError("chain profile '" + c.chain_profile + "' is not defined under chain.profiles");
    }

    Section prep =
        top.section("preparation", {"thermal_excited_population", "pi_pulse_error", "pi_pulse_duration_ns"});
    c.prep.thermal_excited_population = prep.probability("thermal_excited_population");
    c.prep.pi_pulse_error = prep.probability("pi_pulse_error");
    c.prep.pi_pulse_duration = prep.positive("pi_pulse_duration_ns", -9);
    if (!(c.prep.thermal_excited_population < 1)) {
        throw ConfigError("'preparation.thermal_excited_population' must be < 1");
    }

    c.readout = parse_readout(top.section(
        "readout", {"drive_freq_ghz", "n_bar", "envelope_sqrt_photons_per_us", "t_meas_ns", "sample_dt_ns", "filter",
                    "window_start_ns", "window_length_ns", "optimize_window", "optimize_phase", "window_grid_ns",
                    "histogram_bins"}));

    if (top.has("qnd")) {
        Section q = top.section("qnd", {"delays_us"});
        auto delays = q.numbers("delays_us", -6);
        for (std::size_t i = 0; i < delays.size(); ++i) {
            if (!(delays[i] >= 0) || (i > 0 && delays[i] < delays[i - 1])) {
                throw ConfigError("'qnd.delays_us' must be non-negative and ascending");
            }
        }
        c.qnd_delays = delays;
    }
    if (top.has("postselect")) {
        Section p = top.section("postselect", {"pre_measurement_ns", "depletion_wait_ns"});
        PostSelectionTiming t;
        t.pre_measurement = p.positive("pre_measurement_ns", -9);
        t.depletion_wait = p.non_negative("depletion_wait_ns", -9);
        c.postselect = t;
    }
    if (top.has("rb")) {
        Section r = top.section("rb", {"gate_error", "sequence_lengths", "sequences", "shots_per_sequence"});
        RbConfig rb;
        rb.gate_error = r.number("gate_error");
        if (!(rb.gate_error >= 0 && rb.gate_error <= 0.5)) {
            throw ConfigError("'rb.gate_error' must lie in [0, 0.5]");
        }
        rb.sequence_lengths = r.get<std::vector<std::size_t>>("sequence_lengths");
        rb.sequences = r.count("sequences");
        rb.shots_per_sequence = r.count("shots_per_sequence");
        c.rb = rb;
    }
    if (top.has("optimize")) {
        c.ga = parse_ga(top.section(
            "optimize", {"population", "generations", "mutation_rate", "mutation_scale", "crossover_rate", "elitism",
                         "segments", "shots_per_eval", "constraint_max_photons", "init_spread",
                         "max_amplitude_factor", "optimize_drive_freq", "drive_freq_span_mhz", "optimize_window"}));
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void require_protocol(const RunConfig& config, Protocol protocol) {
    if (config.protocol && *config.protocol != protocol) {
        throw ConfigError(std::string("config selects protocol '") + to_string(*config.protocol) + "', not '" +
                          to_string(protocol) + "'");
    }
    if (protocol == Protocol::qnd && !config.qnd_delays) {
        throw ConfigError("missing section 'qnd'");
    }
    if (protocol == Protocol::postselect && !config.postselect) {
        throw ConfigError("missing section 'postselect'");
    }
    if (protocol == Protocol::rb && !config.rb) {
        throw ConfigError("missing section 'rb'");
    }
}

ReadoutPulse make_pulse(const RunConfig& c) {
    const ReadoutConfig& r = c.readout;
    if (r.n_bar) {
        return make_readout_pulse(c.device, r.drive_freq, *r.n_bar, r.t_meas, r.sample_dt);
    }
    ReadoutPulse p = ReadoutPulse::constant(r.drive_freq, Complex{}, r.t_meas, r.sample_dt);
    const std::size_t n = p.envelope.size();
    const std::size_t s = r.envelope.size();
    if (s > n) {
        throw ConfigError("'readout.envelope_sqrt_photons_per_us' has more segments than samples");
    }
    for (std::size_t k = 0; k < s; ++k) {
        for (std::size_t i = k * n / s; i < (k + 1) * n / s; ++i) {
            p.envelope[i] = r.envelope[k];
        }
    }
    return p;
}

ExperimentSetup make_setup(const RunConfig& c, unsigned threads) {
    ExperimentSetup s;
    s.device = c.device;
    s.chain = c.chain();
    s.prep = c.prep;
    s.pulse = make_pulse(c);
    s.filter = c.readout.filter;
    s.optimize_window = c.readout.optimize_window;
    s.optimize_phase = c.readout.optimize_phase;
    s.window_grid = c.readout.window_grid;
    s.histogram_bins = c.readout.histogram_bins;
    s.seed = c.seed;
    s.threads = threads;
    try {
        validate(s.pulse, s.device.cavity_linewidth_kappa);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("readout: ") + e.what());
    }
    return s;
}

std::string paper_defaults() {
    return R"(# Readout of a transmon through a SLUG + HEMT chain: measured device parameters.
# Every key carries its unit. Optional keys are marked as such; all others are required.

# protocol: fidelity   # optional; when present it must match the subcommand

run:
  seed: 7
  shots: 40000
  output_dir: runs

device:
  cavity_freq_ghz: 8.081
  cavity_linewidth_mhz: 10
  qubit_freq_ghz: 5.0353
  anharmonicity_mhz: 233
  coupling_g_mhz: 67.6
  t1_us: 2.8
  t2_star_us: 2.0
  ground_shift_positive: true   # optional, default true
  # chi_override_mhz: -1.5      # optional; replaces g^2/Delta

chain:
  profile: slug
  profiles:
    slug:
      noise_photons: 3.2
      power_gain_db: 55
      saturation_photons: 35
    hemt:
      noise_temperature_k: 4.1
      power_gain_db: 40
      saturation_photons: 1000000

preparation:
  thermal_excited_population: 0.0145
  pi_pulse_error: 0.005
  pi_pulse_duration_ns: 40

readout:
  drive_freq_ghz: 8.0762
  n_bar: 24
  t_meas_ns: 200
  sample_dt_ns: 1               # optional, default 1
  filter: boxcar
  window_start_ns: 0
  window_length_ns: 200
  optimize_window: true
  optimize_phase: true
  window_grid_ns: 5             # optional, default 5
  histogram_bins: 200           # optional, default 200

qnd:
  delays_us: [0, 0.25, 0.5, 1, 1.5, 2, 3, 4, 5, 6, 8]

postselect:
  pre_measurement_ns: 320
  depletion_wait_ns: 300

rb:
  gate_error: 0.005
  sequence_lengths: [1, 5, 10, 20, 50, 100, 150, 200, 300]
  sequences: 30
  shots_per_sequence: 400

optimize:                       # every key optional; defaults shown
  population: 24
  generations: 30
  segments: 8
  shots_per_eval: 2000
  mutation_rate: 0.2
  mutation_scale: 0.15
  crossover_rate: 0.7
  elitism: 2
  constraint_max_photons: 35
  init_spread: 0.3
  max_amplitude_factor: 3
  optimize_drive_freq: false
  drive_freq_span_mhz: 2
  optimize_window: false
)";
}

}  // namespace rsim::cli
