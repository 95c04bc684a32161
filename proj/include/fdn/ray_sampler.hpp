#pragma once

// Region-based ray importance sampling: power-remapped segmentation-region
// weights, exact integer ray allocation, and weighted pixel draws with an
// optional per-pixel boost for regions with unreliable priors.

#include "fdn/core.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace fdn {

// Power-remapped sampling weights over the segmented regions of one image:
// W_j = N_j^(1/delta) / sum_k N_k^(1/delta).
struct RegionWeights {
    std::vector<double> counts;   // pixel count per region (0 = dropped)
    std::vector<double> weights;  // sums to 1 over the positive-count regions
    double delta = 1.0;
};

inline RegionWeights region_weights(const std::vector<double>& counts, double delta) {
    if (counts.empty())
        throw std::invalid_argument("region_weights: empty region list");
    if (!(delta >= 1.0))
        throw std::invalid_argument("region_weights: delta must be >= 1");
    RegionWeights rw;
    rw.counts = counts;
    rw.delta = delta;
    rw.weights.assign(counts.size(), 0.0);
    double total = 0.0;
    for (size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] < 0.0)
            throw std::invalid_argument("region_weights: negative pixel count");
        if (counts[j] > 0.0) {
            rw.weights[j] = std::pow(counts[j], 1.0 / delta);
            total += rw.weights[j];
        }
    }
    if (total <= 0.0)
        throw std::invalid_argument("region_weights: all regions empty");
    for (double& w : rw.weights) w /= total;
    return rw;
}

// Integer ray counts per region: largest-remainder rounding of W_j * q with
// a one-ray floor for every positive-weight region, summing exactly to q.
inline std::vector<int> allocate_rays(const RegionWeights& w, int q) {
    int positive = 0;
    for (double v : w.weights) positive += v > 0.0;
    if (positive == 0)
        throw std::invalid_argument("allocate_rays: no positive-weight region");
    if (q < positive)
        throw std::invalid_argument("allocate_rays: budget smaller than region count");

    const size_t r = w.weights.size();
    std::vector<int> alloc(r, 0);
    std::vector<double> remainder(r, 0.0);
    int assigned = 0;
    for (size_t j = 0; j < r; ++j) {
        const double ideal = w.weights[j] * q;
        alloc[j] = static_cast<int>(std::floor(ideal));
        remainder[j] = ideal - alloc[j];
        assigned += alloc[j];
    }
    std::vector<size_t> order(r);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return remainder[a] > remainder[b]; });
    for (size_t i = 0; assigned < q; ++i) {
        ++alloc[order[i % r]];
        ++assigned;
    }
    // one-ray floor: steal from the largest bucket
    for (size_t j = 0; j < r; ++j) {
        while (w.weights[j] > 0.0 && alloc[j] == 0) {
            size_t donor = std::max_element(alloc.begin(), alloc.end()) - alloc.begin();
            if (alloc[donor] <= 1) break;
            --alloc[donor];
            ++alloc[j];
        }
    }
    return alloc;
}

// Linear schedule for the region-weight exponent over training.
inline double delta_schedule(int iter, int total_iters, double delta_start = 1.0,
                             double delta_end = 2.0) {
    if (total_iters <= 0)
        throw std::invalid_argument("delta_schedule: total_iters must be positive");
    if (iter < 0 || iter > total_iters)
        throw std::invalid_argument("delta_schedule: iter out of range");
    return delta_start + (delta_end - delta_start) *
               static_cast<double>(iter) / total_iters;
}

// ---------------------------------------------------------------------------
// Pixel draws.

struct SampledRay {
    int px = 0, py = 0;
    int region = 0;
    Ray ray;
};

// Per-region lists of valid pixel indices, built once per view and reused
// across iterations.
struct RegionIndex {
    int width = 0, height = 0;
    std::vector<std::vector<int>> pixels;  // flat index y*width+x per region

    static RegionIndex build(const ImagePlane<double>& segmentation,
                             const ImagePlane<double>& valid, int n_regions) {
        RegionIndex idx;
        idx.width = segmentation.width();
        idx.height = segmentation.height();
        idx.pixels.resize(n_regions);
        for (int y = 0; y < segmentation.height(); ++y)
            for (int x = 0; x < segmentation.width(); ++x) {
                if (valid.at(x, y) <= 0.0) continue;
                const int r = static_cast<int>(std::lround(segmentation.at(x, y)));
                if (r >= 0 && r < n_regions)
                    idx.pixels[r].push_back(y * segmentation.width() + x);
            }
        return idx;
    }

    std::vector<double> counts() const {
        std::vector<double> c(pixels.size());
        for (size_t j = 0; j < pixels.size(); ++j) c[j] = static_cast<double>(pixels[j].size());
        return c;
    }
};

// Draw the allocated number of pixels per region (with replacement), with
// per-pixel probability proportional to the boost map (>= 1 everywhere,
// nullptr = uniform), and build camera rays through the pixel centers.
// Budget assigned to a region with no valid pixels is redistributed over the
// remaining regions by largest remainder.
inline std::vector<SampledRay> sample_rays(const RegionIndex& index,
                                           const RegionWeights& weights,
                                           std::vector<int> alloc,
                                           const CameraView& view,
                                           const ImagePlane<double>* boost,
                                           double near, double far, SeededRng& rng) {
    if (alloc.size() != index.pixels.size())
        throw std::invalid_argument("sample_rays: allocation/region mismatch");

    // redistribute budget stuck in empty regions
    int orphane = 0;
    double live_weight = 0.0;
    for (size_t j = 0; j < alloc.size(); ++j) {
        if (index.pixels[j].empty() && alloc[j] > 0) {
            orphane += alloc[j];
            alloc[j] = 0;
        } else if (!index.pixels[j].empty()) {
            live_weight += weights.weights[j];
        }
    }
    if (orphane > 0 && live_weight > 0.0) {
        std::vector<double> ideal(alloc.size(), 0.0);
        std::vector<size_t> live;
        int given = 0;
        for (size_t j = 0; j < alloc.size(); ++j) {
            if (index.pixels[j].empty()) continue;
            live.push_back(j);
            ideal[j] = weights.weights[j] / live_weight * orphane;
            alloc[j] += static_cast<int>(std::floor(ideal[j]));
            given += static_cast<int>(std::floor(ideal[j]));
        }
        std::stable_sort(live.begin(), live.end(), [&](size_t a, size_t b) {
            return ideal[a] - std::floor(ideal[a]) > ideal[b] - std::floor(ideal[b]);
        });
        for (size_t i = 0; given < orphane && !live.empty(); ++i) {
            ++alloc[live[i % live.size()]];
            ++given;
        }
    }

    std::vector<SampledRay> out;
    std::vector<double> cumw;
    for (size_t j = 0; j < alloc.size(); ++j) {
        if (alloc[j] == 0) continue;
        const auto& pix = index.pixels[j];
        cumw.resize(pix.size());
        double acc = 0.0;
        for (size_t i = 0; i < pix.size(); ++i) {
            const int x = pix[i] % index.width, y = pix[i] / index.width;
            acc += boost ? boost->at(x, y) : 1.0;
            cumw[i] = acc;
        }
        for (int s = 0; s < alloc[j]; ++s) {
            const double u = rng.uniform() * acc;
            size_t i = std::lower_bound(cumw.begin(), cumw.end(), u) - cumw.begin();
            if (i >= pix.size()) i = pix.size() - 1;
            SampledRay sr;
            sr.px = pix[i] % index.width;
            sr.py = pix[i] / index.width;
            sr.region = static_cast<int>(j);
            sr.ray = ray_through_pixel(view, sr.px, sr.py, near, far);
            out.push_back(sr);
        }
    }
    return out;
}

// Per-pixel multiplicative boost factors derived from an uncertainty
// indicator: 1 + beta where the prior was flagged unreliable, 1 elsewhere.
inline ImagePlane<double> uncertainty_boost_map(const ImagePlane<double>& unreliable,
                                                double beta) {
    ImagePlane<double> boost(unreliable.width(), unreliable.height(), 1, 1.0);
    for (int y = 0; y < unreliable.height(); ++y)
        for (int x = 0; x < unreliable.width(); ++x)
            if (unreliable.at(x, y) > 0.0) boost.at(x, y) = 1.0 + beta;
    return boost;
}

}  // namespace fdn
