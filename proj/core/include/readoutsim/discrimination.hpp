#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "readoutsim/cavity.hpp"

namespace rsim {

enum class FilterKind { boxcar, matched };

const char* to_string(FilterKind kind);

/// How a complex record is reduced to a scalar score.
struct FilterSpec {
    FilterKind kind = FilterKind::boxcar;
    double window_start = 0.0;   // s, from the start of the record
    double window_length = 0.0;  // s
    double quadrature_phase = 0.0;
    /// Matched-filter weights over the window, one per record sample, unit energy.
    std::vector<Complex> weights;

    bool operator==(const FilterSpec&) const = default;
};

/// Sample range [first, first + count) covered by the window of `spec`.
struct SampleWindow {
    std::size_t first = 0;
    std::size_t count = 0;
};

SampleWindow window_samples(const FilterSpec& spec, double sample_dt, std::size_t record_length);

/// Boxcar: mean of Re[exp(-i phi) r] over the window. Matched: Re[exp(-i phi) sum conj(w) r].
/// Throws std::out_of_range when the window does not fit in the record.
double apply_filter(std::span<const Complex> record, double sample_dt, const FilterSpec& spec);

/// Scales `weights` to unit energy. Throws on an all-zero vector.
std::vector<Complex> normalize_weights(std::vector<Complex> weights);

/// Decision rule produced by fit_threshold. A score on the excited side of the
/// threshold (above it when `excited_above`) is read as |e>.
struct ThresholdFit {
    double threshold = 0.0;
    bool excited_above = true;
    bool zero_separability = false;
    /// Minimum error_g + error_e achieved on the fitted scores.
    double error_sum = 1.0;

    bool reads_excited(double score) const { return excited_above ? score > threshold : score < threshold; }

    bool operator==(const ThresholdFit&) const = default;
};

/// Threshold minimizing error_g + error_e on the empirical distributions.
/// Among equally good thresholds, returns the midpoint of the optimal interval.
ThresholdFit fit_threshold(std::span<const double> scores_g, std::span<const double> scores_e);

struct DiscriminationReport {
    double threshold = 0.0;
    double snr_meas = 0.0;
    /// SNR from the Gaussian cores: median separation over (1.4826 MAD_g + 1.4826 MAD_e).
    double snr_core = 0.0;
    double mean_g = 0.0;
    double mean_e = 0.0;
    double sigma_g = 0.0;
    double sigma_e = 0.0;
    double error_g = 0.0;
    double error_e = 0.0;
    double fidelity = 0.0;  // 1 - error_g - error_e
    std::size_t shots_g = 0;
    std::size_t shots_e = 0;
    bool snr_undefined = false;
    bool zero_separability = false;

    bool operator==(const DiscriminationReport&) const = default;
};

DiscriminationReport compute_report(std::span<const double> scores_g, std::span<const double> scores_e,
                                    const ThresholdFit& threshold);

/// erf(snr / sqrt 2): fidelity if Gaussian overlap were the only error.
double gaussian_fidelity_bound(double snr);

struct Histogram {
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts_g;
    std::vector<std::size_t> counts_e;
    bool degenerate = false;

    std::size_t bins() const { return counts_g.size(); }
    double bin_center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }

    bool operator==(const Histogram&) const = default;
};

/// Shared equal-width bins spanning the pooled range.
Histogram build_histogram(std::span<const double> scores_g, std::span<const double> scores_e, std::size_t bins);

/// CSV with header `bin_center,count_g,count_e`.
void write_histogram_csv(std::ostream& out, const Histogram& histogram);

}  // namespace rsim
