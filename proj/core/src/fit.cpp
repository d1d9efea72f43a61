#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "readoutsim/protocols.hpp"

namespace rsim {

double ExponentialFit::operator()(double x) const {
    return amplitude * std::exp(-x / decay_time) + offset;
}

namespace {

struct LinearSolve {
    double amplitude;  // coefficient of exp(-(x - x0) / tau)
    double offset;
    double sse;
};

LinearSolve solve_linear(std::span<const double> x, std::span<const double> y, double tau) {
    const double x0 = x.front();
    const auto n = static_cast<double>(x.size());
    double su = 0, suu = 0, sy = 0, suy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double u = std::exp(-(x[i] - x0) / tau);
        su += u;
        suu += u * u;
        sy += y[i];
        suy += u * y[i];
    }
    double det = n * suu - su * su;
    LinearSolve s{0.0, sy / n, 0.0};
    if (std::abs(det) > 1e-14 * n * suu) {
        s.amplitude = (n * suy - su * sy) / det;
        s.offset = (suu * sy - su * suy) / det;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - (s.amplitude * std::exp(-(x[i] - x0) / tau) + s.offset);
        s.sse += r * r;
    }
    return s;
}

}  // namespace

ExponentialFit fit_exponential(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("fit_exponential: x and y differ in length");
    }
    if (x.size() < 4) {
        throw std::invalid_argument("fit_exponential needs at least 4 points");
    }
    double min_step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < x.size(); ++i) {
        double d = x[i] - x[i - 1];
        if (!(d > 0)) {
            throw std::invalid_argument("fit_exponential: x must be strictly ascending");
        }
        min_step = std::min(min_step, d);
    }
    const double span = x.back() - x.front();
    const double log_lo = std::log(min_step / 50.0);
    const double log_hi = std::log(span * 50.0);

    auto sse_at = [&](double log_tau) { return solve_linear(x, y, std::exp(log_tau)).sse; };

    constexpr int kGrid = 400;
    int best = 0;
    double best_sse = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kGrid; ++i) {
        double lt = log_lo + (log_hi - log_lo) * i / kGrid;
        double s = sse_at(lt);
        if (s < best_sse) {
            best_sse = s;
            best = i;
        }
    }

    const double h = (log_hi - log_lo) / kGrid;
    double a = log_lo + h * std::max(best - 1, 0);
    double b = log_lo + h * std::min(best + 1, kGrid);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = sse_at(c);
    double fd = sse_at(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sse_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sse_at(d);
        }
    }
    double log_tau = 0.5 * (a + b);
    if (best_sse < sse_at(log_tau)) {
        log_tau = log_lo + h * best;
    }

    ExponentialFit fit;
    fit.decay_time = std::exp(log_tau);
    LinearSolve s = solve_linear(x, y, fit.decay_time);
    fit.amplitude = s.amplitude * std::exp(x.front() / fit.decay_time);
    if (!std::isfinite(fit.amplitude)) {
        fit.amplitude = s.amplitude;
    }
    fit.offset = s.offset;
    fit.residual_norm = std::sqrt(s.sse);
    fit.pinned = best == 0 || best == kGrid;
    return fit;
}

}  // namespace rsim
