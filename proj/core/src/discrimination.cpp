#include "readoutsim/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "readoutsim/io.hpp"

namespace rsim {

const char* to_string(FilterKind kind) { return kind == FilterKind::boxcar ? "boxcar" : "matched"; }

SampleWindow window_samples(const FilterSpec& spec, double sample_dt, std::size_t record_length) {
    if (!(spec.window_start >= 0) || !(spec.window_length > 0) || !(sample_dt > 0)) {
        throw std::out_of_range("filter window must have start >= 0 and length > 0");
    }
    auto first = static_cast<std::size_t>(std::llround(spec.window_start / sample_dt));
    auto count = static_cast<std::size_t>(std::llround(spec.window_length / sample_dt));
    if (count == 0 || first + count > record_length) {
        throw std::out_of_range("filter window [" + format_double(spec.window_start) + ", " +
                                format_double(spec.window_start + spec.window_length) +
                                ") s does not fit in a record of " + std::to_string(record_length) + " samples");
    }
    return {first, count};
}

double apply_filter(std::span<const Complex> record, double sample_dt, const FilterSpec& spec) {
    SampleWindow w = window_samples(spec, sample_dt, record.size());
    const Complex rot = std::polar(1.0, -spec.quadrature_phase);
    auto window = record.subspan(w.first, w.count);
    if (spec.kind == FilterKind::boxcar) {
        Complex sum = std::accumulate(window.begin(), window.end(), Complex{});
        return (rot * sum).real() / static_cast<double>(w.count);
    }
    if (spec.weights.size() != w.count) {
        throw std::out_of_range("matched-filter weights must have one entry per window sample");
    }
    Complex acc{};
    for (std::size_t k = 0; k < w.count; ++k) {
        acc += std::conj(spec.weights[k]) * window[k];
    }
    return (rot * acc).real();
}

std::vector<Complex> normalize_weights(std::vector<Complex> weights) {
    double energy = 0;
    for (const auto& w : weights) {
        energy += std::norm(w);
    }
    if (!(energy > 0) || !std::isfinite(energy)) {
        throw std::invalid_argument("matched-filter weights have zero energy");
    }
    double scale = 1.0 / std::sqrt(energy);
    for (auto& w : weights) {
        w *= scale;
    }
    return weights;
}

namespace {

double mean_of(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stddev_of(std::span<const double> xs, double mean) {
    double acc = 0;
    for (double x : xs) {
        acc += (x - mean) * (x - mean);
    }
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

double median_of(std::vector<double> xs) {
    auto mid = xs.begin() + static_cast<std::ptrdiff_t>(xs.size() / 2);
    std::nth_element(xs.begin(), mid, xs.end());
    double hi = *mid;
    if (xs.size() % 2 == 1) {
        return hi;
    }
    double lo = *std::max_element(xs.begin(), mid);
    return 0.5 * (lo + hi);
}

// Median and normal-consistent MAD scale.
std::pair<double, double> robust_location_scale(std::span<const double> xs) {
    std::vector<double> v(xs.begin(), xs.end());
    double med = median_of(v);
    for (auto& x : v) {
        x = std::abs(x - med);
    }
    return {med, 1.4826 * median_of(std::move(v))};
}

}  // namespace

ThresholdFit fit_threshold(std::span<const double> scores_g, std::span<const double> scores_e) {
    if (scores_g.empty() || scores_e.empty()) {
        throw std::invalid_argument("fit_threshold needs at least one score per class");
    }
    const double mean_g = mean_of(scores_g);
    const double mean_e = mean_of(scores_e);
    ThresholdFit fit;
    fit.excited_above = mean_e >= mean_g;
    const double sign = fit.excited_above ? 1.0 : -1.0;

    // Oriented so that |e> reads high.
    std::vector<double> g(scores_g.size());
    std::vector<double> e(scores_e.size());
    std::transform(scores_g.begin(), scores_g.end(), g.begin(), [&](double x) { return sign * x; });
    std::transform(scores_e.begin(), scores_e.end(), e.begin(), [&](double x) { return sign * x; });
    std::sort(g.begin(), g.end());
    std::sort(e.begin(), e.end());

    const auto ng = static_cast<std::int64_t>(g.size());
    const auto ne = static_cast<std::int64_t>(e.size());

    // Gap k lies just above the k-th distinct pooled value (k = -1 is below all).
    // Cost is (error_g + error_e) * ng * ne, kept in integers so ties are exact.
    std::vector<double> values;
    values.reserve(g.size() + e.size());
    std::merge(g.begin(), g.end(), e.begin(), e.end(), std::back_inserter(values));
    values.erase(std::unique(values.begin(), values.end()), values.end());

    struct Gap {
        double lo;
        double hi;
        std::int64_t cost;
    };
    std::vector<Gap> gaps;
    gaps.reserve(values.size() + 1);
    const double inf = std::numeric_limits<double>::infinity();
    std::int64_t g_above = ng;  // g scores above the gap
    std::int64_t e_below = 0;   // e scores below the gap
    std::size_t ig = 0;
    std::size_t ie = 0;
    gaps.push_back({-inf, values.front(), g_above * ne + e_below * ng});
    for (std::size_t k = 0; k < values.size(); ++k) {
        while (ig < g.size() && g[ig] == values[k]) {
            --g_above;
            ++ig;
        }
        while (ie < e.size() && e[ie] == values[k]) {
            ++e_below;
            ++ie;
        }
        double hi = k + 1 < values.size() ? values[k + 1] : inf;
        gaps.push_back({values[k], hi, g_above * ne + e_below * ng});
    }

    std::int64_t best = std::min_element(gaps.begin(), gaps.end(), [](const Gap& a, const Gap& b) {
                            return a.cost < b.cost;
                        })->cost;

    const double pooled_mid = 0.5 * (sign * mean_g + sign * mean_e);
    fit.error_sum = static_cast<double>(best) / (static_cast<double>(ng) * static_cast<double>(ne));
    if (best >= ng * ne) {
        fit.zero_separability = true;
        fit.threshold = sign * pooled_mid;
        return fit;
    }

    // Optimal intervals are maximal runs of adjacent optimal gaps; pick the one
    // whose midpoint is nearest the midpoint of the class means.
    double chosen = 0;
    double chosen_dist = inf;
    for (std::size_t k = 0; k < gaps.size();) {
        if (gaps[k].cost != best) {
            ++k;
            continue;
        }
        std::size_t j = k;
        while (j + 1 < gaps.size() && gaps[j + 1].cost == best) {
            ++j;
        }
        double lo = gaps[k].lo;
        double hi = gaps[j].hi;
        double mid;
        if (std::isinf(lo) && std::isinf(hi)) {
            mid = pooled_mid;
        } else if (std::isinf(lo)) {
            mid = hi;
        } else if (std::isinf(hi)) {
            mid = lo;
        } else {
            mid = 0.5 * (lo + hi);
        }
        double dist = std::abs(mid - pooled_mid);
        if (dist < chosen_dist) {
            chosen = mid;
            chosen_dist = dist;
        }
        k = j + 1;
    }
    fit.threshold = sign * chosen;
    return fit;
}

DiscriminationReport compute_report(std::span<const double> scores_g, std::span<const double> scores_e,
                                    const ThresholdFit& threshold) {
    if (scores_g.empty() || scores_e.empty()) {
        throw std::invalid_argument("compute_report needs at least one score per class");
    }
    DiscriminationReport r;
    r.threshold = threshold.threshold;
    r.zero_separability = threshold.zero_separability;
    r.shots_g = scores_g.size();
    r.shots_e = scores_e.size();
    r.mean_g = mean_of(scores_g);
    r.mean_e = mean_of(scores_e);
    r.sigma_g = stddev_of(scores_g, r.mean_g);
    r.sigma_e = stddev_of(scores_e, r.mean_e);
    double spread = r.sigma_g + r.sigma_e;
    if (spread > 0) {
        r.snr_meas = std::abs(r.mean_g - r.mean_e) / spread;
    } else {
        r.snr_undefined = true;
    }
    auto [med_g, mad_g] = robust_location_scale(scores_g);
    auto [med_e, mad_e] = robust_location_scale(scores_e);
    if (mad_g + mad_e > 0) {
        r.snr_core = std::abs(med_g - med_e) / (mad_g + mad_e);
    }

    std::size_t wrong_g = std::count_if(scores_g.begin(), scores_g.end(),
                                        [&](double s) { return threshold.reads_excited(s); });
    std::size_t wrong_e = std::count_if(scores_e.begin(), scores_e.end(),
                                        [&](double s) { return !threshold.reads_excited(s); });
    r.error_g = static_cast<double>(wrong_g) / static_cast<double>(r.shots_g);
    r.error_e = static_cast<double>(wrong_e) / static_cast<double>(r.shots_e);
    r.fidelity = 1.0 - r.error_g - r.error_e;
    return r;
}

double gaussian_fidelity_bound(double snr) {
    if (!(snr >= 0)) {
        throw std::invalid_argument("snr must be >= 0");
    }
    return std::erf(snr / std::sqrt(2.0));
}

Histogram build_histogram(std::span<const double> scores_g, std::span<const double> scores_e, std::size_t bins) {
    if (bins < 2) {
        throw std::invalid_argument("histogram needs at least 2 bins");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto span : {scores_g, scores_e}) {
        for (double x : span) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
    }
    Histogram h;
    if (scores_g.empty() && scores_e.empty()) {
        h.degenerate = true;
        return h;
    }
    if (!(hi > lo)) {
        h.degenerate = true;
        h.bin_edges = {lo, hi};
        h.counts_g = {scores_g.size()};
        h.counts_e = {scores_e.size()};
        return h;
    }
    h.bin_edges.resize(bins + 1);
    double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) {
        h.bin_edges[i] = lo + width * static_cast<double>(i);
    }
    h.bin_edges.back() = hi;
    h.counts_g.assign(bins, 0);
    h.counts_e.assign(bins, 0);
    auto bin_of = [&](double x) {
        auto i = static_cast<std::size_t>((x - lo) / width);
        return std::min(i, bins - 1);
    };
    for (double x : scores_g) {
        ++h.counts_g[bin_of(x)];
    }
    for (double x : scores_e) {
        ++h.counts_e[bin_of(x)];
    }
    return h;
}

void write_histogram_csv(std::ostream& out, const Histogram& h) {
    CsvWriter csv(out, {"bin_center", "count_g", "count_e"});
    for (std::size_t i = 0; i < h.bins(); ++i) {
        csv.row(h.bin_center(i), h.counts_g[i], h.counts_e[i]);
    }
}

}  // namespace rsim
