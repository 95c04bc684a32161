#pragma once

// Point sampling along rays: uniform/stratified coarse samples plus two
// fine-stage importance samplers driven by coarse weights. The constant-PDF
// mode reproduces classic hierarchical volume sampling; the exponential-PDF
// mode interpolates each interval's boundary weights with m*(n/m)^s and
// inverts its CDF in closed form, concentrating samples toward the
// higher-weight boundary within an interval.

#include "fdn/core.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace fdn {

enum class PdfMode { kConstant, kExponential };

constexpr double kDefaultClampEps = 1e-6;

// Counts silent numeric fixups inside the sampler.
struct SamplerStats {
    std::uint64_t residual_clamps = 0;
};

// One normalized interval with boundary weights m = w(0), n = w(1) and PDF
// w(s) = m*(n/m)^s. Boundary weights are clamped to >= eps before logs; the
// near-equal case |ln n - ln m| < 1e-6 uses the exact uniform limit.
class ExpInterval {
public:
    ExpInterval(double m, double n, double eps = kDefaultClampEps)
        : m_(std::max(m, eps)), n_(std::max(n, eps)) {
        log_ratio_ = std::log(n_) - std::log(m_);
        uniform_ = std::abs(log_ratio_) < 1e-6;
    }

    double m() const { return m_; }
    double n() const { return n_; }
    bool uniform_limit() const { return uniform_; }

    // PDF value at normalized position s
    double pdf(double s) const { return m_ * std::exp(s * log_ratio_); }

    // integral of the PDF over the full normalized interval
    double mass() const {
        if (uniform_) return m_;
        return (n_ - m_) / log_ratio_;
    }

    // integral of the PDF over [0, z]
    double cdf(double z) const {
        if (uniform_) return m_ * z;
        return m_ * std::expm1(z * log_ratio_) / log_ratio_;
    }

    // inverse of cdf(): position z with cdf(z) = dr, clamped to [0, 1]
    double invert(double dr, SamplerStats* stats = nullptr) const {
        double z;
        if (uniform_) {
            z = dr / m_;
        } else {
            z = std::log1p(dr * log_ratio_ / m_) / log_ratio_;
        }
        if (z > 1.0) {
            if (stats) ++stats->residual_clamps;
            z = 1.0;
        }
        return std::max(z, 0.0);
    }

private:
    double m_, n_;
    double log_ratio_;
    bool uniform_;
};

inline double interval_mass_exp(double m, double n, double width,
                                double eps = kDefaultClampEps) {
    return width * ExpInterval(m, n, eps).mass();
}

inline double invert_exp(double m, double n, double dr,
                         double eps = kDefaultClampEps,
                         SamplerStats* stats = nullptr) {
    return ExpInterval(m, n, eps).invert(dr, stats);
}

// ---------------------------------------------------------------------------
// Coarse knots along one ray: n equally spaced (or stratified-jittered)
// distances covering [near, far].
inline std::vector<double> coarse_samples(const Ray& ray, int n, bool stratified,
                                          SeededRng& rng) {
    if (n < 2) throw std::invalid_argument("coarse_samples: need n >= 2");
    std::vector<double> knots(n);
    if (stratified) {
        const double w = (ray.far - ray.near) / n;
        for (int i = 0; i < n; ++i)
            knots[i] = ray.near + (i + rng.uniform()) * w;
    } else {
        const double step = (ray.far - ray.near) / (n - 1);
        for (int i = 0; i < n; ++i) knots[i] = ray.near + i * step;
    }
    return knots;
}

// ---------------------------------------------------------------------------
// Coarse knots with their volume-rendering weights at the knots.
struct IntervalWeights {
    std::vector<double> knots;    // strictly increasing
    std::vector<double> weights;  // >= 0, same length as knots

    void validate() const {
        if (knots.size() < 2 || knots.size() != weights.size())
            throw std::invalid_argument("IntervalWeights: need >= 2 aligned knots/weights");
        for (size_t i = 0; i + 1 < knots.size(); ++i)
            if (!(knots[i] < knots[i + 1]))
                throw std::invalid_argument("IntervalWeights: knots must be strictly increasing");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w))
                throw std::invalid_argument("IntervalWeights: weights must be finite and >= 0");
    }
};

// Per-interval masses and the normalized cumulative probability at each knot.
struct CdfTable {
    std::vector<double> masses;      // one per interval
    std::vector<double> cumulative;  // P_T at each knot; [0] = 0, back() = 1
    double total_mass = 0.0;
};

inline CdfTable build_cdf(const IntervalWeights& w, PdfMode mode,
                          double eps = kDefaultClampEps) {
    w.validate();
    const size_t n_int = w.knots.size() - 1;
    CdfTable table;
    table.masses.resize(n_int);
    table.cumulative.assign(w.knots.size(), 0.0);
    for (size_t i = 0; i < n_int; ++i) {
        const double width = w.knots[i + 1] - w.knots[i];
        const double m = w.weights[i], n = w.weights[i + 1];
        table.masses[i] = mode == PdfMode::kExponential
                              ? interval_mass_exp(m, n, width, eps)
                              : width * 0.5 * (std::max(m, eps) + std::max(n, eps));
        table.cumulative[i + 1] = table.cumulative[i] + table.masses[i];
    }
    table.total_mass = table.cumulative.back();
    if (table.total_mass > 0.0)
        for (double& c : table.cumulative) c /= table.total_mass;
    table.cumulative.back() = 1.0;
    return table;
}

// Draw k fine positions distributed by the coarse weights. Positions only;
// fine_samples() below merges them with the coarse knots.
inline std::vector<double> fine_positions(const IntervalWeights& w, int k, PdfMode mode,
                                          SeededRng& rng, double eps = kDefaultClampEps,
                                          SamplerStats* stats = nullptr) {
    if (k < 1) throw std::invalid_argument("fine_positions: need k >= 1");
    w.validate();
    std::vector<double> out;
    out.reserve(k);

    bool all_zero = true;
    for (double v : w.weights)
        if (v > 0.0) { all_zero = false; break; }
    if (all_zero) {
        // no information in the weights; fall back to uniform fine samples
        for (int i = 0; i < k; ++i)
            out.push_back(rng.uniform(w.knots.front(), w.knots.back()));
        std::sort(out.begin(), out.end());
        return out;
    }

    const CdfTable table = build_cdf(w, mode, eps);
    for (int s = 0; s < k; ++s) {
        const double u = rng.uniform();
        // containing interval: largest i with cumulative[i] <= u
        auto it = std::upper_bound(table.cumulative.begin(), table.cumulative.end(), u);
        size_t idx = static_cast<size_t>(it - table.cumulative.begin());
        idx = idx > 0 ? idx - 1 : 0;
        if (idx >= table.masses.size()) idx = table.masses.size() - 1;

        const double width = w.knots[idx + 1] - w.knots[idx];
        // residual probability within the interval, in the units of the
        // normalized-interval PDF
        const double dr = (u - table.cumulative[idx]) * table.total_mass / width;
        double z;
        if (mode == PdfMode::kExponential) {
            z = ExpInterval(w.weights[idx], w.weights[idx + 1], eps).invert(dr, stats);
        } else {
            const double density = table.masses[idx] / width;
            z = std::clamp(dr / density, 0.0, 1.0);
        }
        out.push_back(w.knots[idx] + z * width);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Fine positions merged with the coarse knots: sorted, duplicates within
// 1e-9 removed.
inline std::vector<double> fine_samples(const IntervalWeights& w, int k, PdfMode mode,
                                        SeededRng& rng, double eps = kDefaultClampEps,
                                        SamplerStats* stats = nullptr) {
    std::vector<double> fine = fine_positions(w, k, mode, rng, eps, stats);
    std::vector<double> merged;
    merged.reserve(fine.size() + w.knots.size());
    std::merge(fine.begin(), fine.end(), w.knots.begin(), w.knots.end(),
               std::back_inserter(merged));
    std::vector<double> out;
    out.reserve(merged.size());
    for (double t : merged)
        if (out.empty() || t - out.back() > 1e-9) out.push_back(t);
    return out;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov statistics, used by sampler diagnostics and tests.

// sup |F_empirical - F| for an analytic CDF evaluated at the samples
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf&& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// two-sample KS statistic
inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i; else ++j;
        const double fa = static_cast<double>(i) / a.size();
        const double fb = static_cast<double>(j) / b.size();
        d = std::max(d, std::abs(fa - fb));
    }
    return d;
}

}  // namespace fdn
