#include "readoutsim/json.hpp"

#include <concepts>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace rsim {

namespace {

template <typename T, typename U>
concept Is = std::same_as<std::remove_const_t<T>, U>;

struct Writer {
    Json& j;
    template <typename T>
    void operator()(const char* key, const T& value) {
        j[key] = value;
    }
    template <typename T>
    void operator()(const char* key, const std::optional<T>& value) {
        j[key] = value ? Json(*value) : Json(nullptr);
    }
};

double number(const Json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); }

struct Reader {
    const Json& j;
    template <typename T>
    void operator()(const char* key, T& value) {
        value = j.at(key).template get<T>();
    }
    // Non-finite doubles are written as null.
    void operator()(const char* key, double& value) { value = number(j.at(key)); }
    void operator()(const char* key, std::vector<double>& value) {
        value.clear();
        for (const Json& v : j.at(key)) {
            value.push_back(number(v));
        }
    }
    template <typename T>
    void operator()(const char* key, std::optional<T>& value) {
        if (!j.contains(key) || j.at(key).is_null()) {
            value.reset();
        } else {
            value = j.at(key).template get<T>();
        }
    }
};

template <typename V, Is<DeviceParams> D>
void fields(V&& v, D& d) {
    v("cavity_freq_hz", d.cavity_freq);
    v("cavity_linewidth_kappa_hz", d.cavity_linewidth_kappa);
    v("qubit_freq_hz", d.qubit_freq);
    v("anharmonicity_hz", d.anharmonicity);
    v("coupling_g_hz", d.coupling_g);
    v("t1_s", d.t1);
    v("t2_star_s", d.t2_star);
    v("chi_override_hz", d.chi_override);
    v("ground_shift_positive", d.ground_shift_positive);
}

template <typename V, Is<AmplifierChain> D>
void fields(V&& v, D& c) {
    v("noise_photons", c.noise_photons);
    v("power_gain_db", c.power_gain_db);
    v("saturation_photons", c.saturation_photons);
}

template <typename V, Is<PreparationModel> D>
void fields(V&& v, D& p) {
    v("thermal_excited_population", p.thermal_excited_population);
    v("pi_pulse_error", p.pi_pulse_error);
    v("pi_pulse_duration_s", p.pi_pulse_duration);
}

template <typename V, Is<ReadoutPulse> D>
void fields(V&& v, D& p) {
    v("drive_freq_hz", p.drive_freq);
    v("sample_dt_s", p.sample_dt);
    v("envelope", p.envelope);
}

template <typename V, Is<ThresholdFit> D>
void fields(V&& v, D& t) {
    v("threshold", t.threshold);
    v("excited_above", t.excited_above);
    v("zero_separability", t.zero_separability);
    v("error_sum", t.error_sum);
}

template <typename V, Is<DiscriminationReport> D>
void fields(V&& v, D& r) {
    v("threshold", r.threshold);
    v("snr_meas", r.snr_meas);
    v("snr_core", r.snr_core);
    v("mean_g", r.mean_g);
    v("mean_e", r.mean_e);
    v("sigma_g", r.sigma_g);
    v("sigma_e", r.sigma_e);
    v("error_g", r.error_g);
    v("error_e", r.error_e);
    v("fidelity", r.fidelity);
    v("shots_g", r.shots_g);
    v("shots_e", r.shots_e);
    v("snr_undefined", r.snr_undefined);
    v("zero_separability", r.zero_separability);
}

template <typename V, Is<Histogram> D>
void fields(V&& v, D& h) {
    v("bin_edges", h.bin_edges);
    v("counts_g", h.counts_g);
    v("counts_e", h.counts_e);
    v("degenerate", h.degenerate);
}

template <typename V, Is<CalibratedReadout> D>
void fields(V&& v, D& c) {
    v("filter", c.filter);
    v("threshold", c.threshold);
    v("calibration_fidelity", c.calibration_fidelity);
}

template <typename V, Is<PhysicsFlags> D>
void fields(V&& v, D& f) {
    v("shots_over_ncrit", f.shots_over_ncrit);
    v("shots_over_saturation", f.shots_over_saturation);
    v("max_photons", f.max_photons);
}

template <typename V, Is<ExponentialFit> D>
void fields(V&& v, D& f) {
    v("amplitude", f.amplitude);
    v("decay_time_s", f.decay_time);
    v("offset", f.offset);
    v("residual_norm", f.residual_norm);
    v("pinned", f.pinned);
}

template <typename V, Is<FidelityResult> D>
void fields(V&& v, D& r) {
    v("report", r.report);
    v("readout", r.readout);
    v("flags", r.flags);
    v("histogram", r.histogram);
}

template <typename V, Is<QndResult> D>
void fields(V&& v, D& r) {
    v("delays_s", r.delays);
    v("p_gg", r.p_gg);
    v("p_ee", r.p_ee);
    v("p_gg_state", r.p_gg_state);
    v("p_ee_state", r.p_ee_state);
    v("conditioned_g", r.conditioned_g);
    v("conditioned_e", r.conditioned_e);
    v("fit_gg", r.fit_gg);
    v("fit_ee", r.fit_ee);
    v("fits_valid", r.fits_valid);
    v("low_statistics", r.low_statistics);
    v("flags", r.flags);
}

template <typename V, Is<PostSelectionTiming> D>
void fields(V&& v, D& t) {
    v("pre_measurement_s", t.pre_measurement);
    v("depletion_wait_s", t.depletion_wait);
}

template <typename V, Is<PostSelectionResult> D>
void fields(V&& v, D& r) {
    v("raw", r.raw);
    v("selected", r.selected);
    v("discard_fraction", r.discard_fraction);
    v("excessive_discard", r.excessive_discard);
    v("raw_histogram", r.raw_histogram);
    v("selected_histogram", r.selected_histogram);
    v("main_readout", r.main_readout);
    v("pre_readout", r.pre_readout);
    v("flags", r.flags);
}

template <typename V, Is<RbResult> D>
void fields(V&& v, D& r) {
    v("sequence_lengths", r.sequence_lengths);
    v("survival", r.survival);
    v("fitted_error_per_gate", r.fitted_error_per_gate);
    v("fit_amplitude", r.fit_amplitude);
    v("fit_decay", r.fit_decay);
    v("fit_offset", r.fit_offset);
    v("fit_failed", r.fit_failed);
}

template <typename V, Is<ThermalCalibration> D>
void fields(V&& v, D& c) {
    v("thermal_excited_population", c.thermal_excited_population);
    v("error_g", c.error_g);
    v("iterations", c.iterations);
    v("converged", c.converged);
}

template <typename V, Is<GaConfig> D>
void fields(V&& v, D& c) {
    v("population", c.population);
    v("generations", c.generations);
    v("mutation_rate", c.mutation_rate);
    v("mutation_scale", c.mutation_scale);
    v("crossover_rate", c.crossover_rate);
    v("elitism", c.elitism);
    v("segments", c.segments);
    v("shots_per_eval", c.shots_per_eval);
    v("constraint_max_photons", c.constraint_max_photons);
    v("init_spread", c.init_spread);
    v("max_amplitude_factor", c.max_amplitude_factor);
    v("optimize_drive_freq", c.optimize_drive_freq);
    v("drive_freq_span_hz", c.drive_freq_span);
    v("optimize_window", c.optimize_window);
}

template <typename V, Is<Genome> D>
void fields(V&& v, D& g) {
    v("genes", g.genes);
    v("freq_offset_hz", g.freq_offset);
}

template <typename V, Is<GaResult> D>
void fields(V&& v, D& r) {
    v("best_envelope", r.best_envelope);
    v("best_genome", r.best_genome);
    v("best_fitness", r.best_fitness);
    v("best_max_photons", r.best_max_photons);
    v("constraint_satisfied", r.constraint_satisfied);
    v("baseline_fitness", r.baseline_fitness);
    v("history_best", r.history_best);
    v("history_mean", r.history_mean);
    v("evaluations", r.evaluations);
    v("generations_run", r.generations_run);
    v("zero_diversity_stop", r.zero_diversity_stop);
    v("winner_rescaled", r.winner_rescaled);
}

}  // namespace

#define RSIM_JSON_FIELDS(Type)                                       \
    void to_json(Json& j, const Type& x) {                          \
        j = Json::object();                                         \
        fields(Writer{j}, x);                                       \
    }                                                               \
    void from_json(const Json& j, Type& x) { fields(Reader{j}, x); }

RSIM_JSON_FIELDS(DeviceParams)
RSIM_JSON_FIELDS(AmplifierChain)
RSIM_JSON_FIELDS(PreparationModel)
RSIM_JSON_FIELDS(ReadoutPulse)
RSIM_JSON_FIELDS(ThresholdFit)
RSIM_JSON_FIELDS(DiscriminationReport)
RSIM_JSON_FIELDS(Histogram)
RSIM_JSON_FIELDS(CalibratedReadout)
RSIM_JSON_FIELDS(PhysicsFlags)
RSIM_JSON_FIELDS(ExponentialFit)
RSIM_JSON_FIELDS(FidelityResult)
RSIM_JSON_FIELDS(QndResult)
RSIM_JSON_FIELDS(PostSelectionTiming)
RSIM_JSON_FIELDS(PostSelectionResult)
RSIM_JSON_FIELDS(RbResult)
RSIM_JSON_FIELDS(ThermalCalibration)
RSIM_JSON_FIELDS(GaConfig)
RSIM_JSON_FIELDS(Genome)
RSIM_JSON_FIELDS(GaResult)

#undef RSIM_JSON_FIELDS

void to_json(Json& j, const FilterSpec& f) {
    j = Json{{"kind", to_string(f.kind)},
             {"window_start_s", f.window_start},
             {"window_length_s", f.window_length},
             {"quadrature_phase_rad", f.quadrature_phase},
             {"weights", f.weights}};
}

void from_json(const Json& j, FilterSpec& f) {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "boxcar") {
        f.kind = FilterKind::boxcar;
    } else if (kind == "matched") {
        f.kind = FilterKind::matched;
    } else {
        throw std::invalid_argument("unknown filter kind '" + kind + "'");
    }
    f.window_start = number(j.at("window_start_s"));
    f.window_length = number(j.at("window_length_s"));
    f.quadrature_phase = number(j.at("quadrature_phase_rad"));
    f.weights = j.at("weights").get<std::vector<Complex>>();
}

}  // namespace rsim
