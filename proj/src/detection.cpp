#include "mtk/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>

#include "mtk/parallel.hpp"

namespace mtk {

void DetectParams::validate() const {
    if (median_radius < 0) throw ConfigError("median radius must be >= 0");
    if (fixed_threshold < 0.0 || fixed_threshold > 1.0)
        throw ConfigError("fixed threshold must lie in [0, 1]");
    if (min_area < 1) throw ConfigError("min area must be >= 1");
    if (z_link_radius <= 0.0) throw ConfigError("z-link radius must be > 0");
}

namespace {

// Median filter with clamped borders. Window is (2r+1)^2, always odd.
std::vector<float> median_filter(const float* src, std::int64_t h, std::int64_t w, int radius) {
    std::vector<float> out(static_cast<std::size_t>(h * w));
    if (radius == 0) {
        std::copy(src, src + h * w, out.begin());
        return out;
    }
    std::vector<float> window;
    window.reserve(std::size_t(2 * radius + 1) * std::size_t(2 * radius + 1));
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            window.clear();
            for (int dy = -radius; dy <= radius; ++dy) {
                const std::int64_t yy = std::clamp<std::int64_t>(y + dy, 0, h - 1);
                for (int dx = -radius; dx <= radius; ++dx) {
                    const std::int64_t xx = std::clamp<std::int64_t>(x + dx, 0, w - 1);
                    window.push_back(src[yy * w + xx]);
                }
            }
            auto mid = window.begin() + static_cast<std::ptrdiff_t>(window.size() / 2);
            std::nth_element(window.begin(), mid, window.end());
            out[static_cast<std::size_t>(y * w + x)] = *mid;
        }
    }
    return out;
}

// Otsu threshold over a 256-bin histogram. Returns the largest sample value
// assigned to the background class, so `v > threshold` reproduces the class
// split exactly. A slice with no between-class separation returns a value
// at/above the slice maximum, yielding an empty mask under strict >.
float otsu_threshold(const std::vector<float>& values) {
    constexpr int kBins = 256;
    std::array<std::int64_t, kBins> hist{};
    std::array<float, kBins> bin_max{};
    bin_max.fill(0.0f);
    for (float v : values) {
        int b = static_cast<int>(v * kBins);
        b = std::clamp(b, 0, kBins - 1);
        ++hist[b];
        bin_max[b] = std::max(bin_max[b], v);
    }
    const double total = static_cast<double>(values.size());
    double sum_all = 0.0;
    for (int b = 0; b < kBins; ++b) sum_all += double(b) * double(hist[b]);

    double w0 = 0.0, sum0 = 0.0, best_var = 0.0;
    int best_split = -1;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += double(hist[k]);
        sum0 += double(k) * double(hist[k]);
        const double w1 = total - w0;
        if (w0 == 0.0 || w1 == 0.0) continue;
        const double mu0 = sum0 / w0;
        const double mu1 = (sum_all - sum0) / w1;
        const double var = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (var > best_var) {
            best_var = var;
            best_split = k;
        }
    }
    if (best_split < 0) {
        // constant slice: threshold at the single intensity
        float mx = 0.0f;
        for (float v : values) mx = std::max(mx, v);
        return mx;
    }
    float thr = 0.0f;
    for (int b = 0; b <= best_split; ++b) thr = std::max(thr, bin_max[b]);
    return thr;
}

}  // namespace

SliceMask preprocess_slice(const Volume4D& volume, std::int64_t t, std::int64_t z,
                           const DetectParams& params) {
    params.validate();
    const std::int64_t h = volume.height(), w = volume.width();
    const std::vector<float> filtered =
        median_filter(volume.slice_ptr(t, z), h, w, params.median_radius);

    const float thr = params.mode == ThresholdMode::otsu
                          ? otsu_threshold(filtered)
                          : static_cast<float>(params.fixed_threshold);

    SliceMask mask;
    mask.frame = t;
    mask.depth = z;
    mask.height = h;
    mask.width = w;
    mask.bits.resize(static_cast<std::size_t>(h * w));
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        mask.bits[i] = filtered[i] > thr ? 1 : 0;
    return mask;
}

std::vector<Particle2D> extract_particles(const SliceMask& mask, const Volume4D& volume,
                                          const DetectParams& params) {
    const std::int64_t h = mask.height, w = mask.width;
    if (h != volume.height() || w != volume.width())
        throw DataError("mask dims do not match volume slice dims");

    std::vector<std::int32_t> label(static_cast<std::size_t>(h * w), -1);
    std::vector<Particle2D> out;
    std::vector<std::int64_t> stack;

    std::int32_t next_label = 0;
    for (std::int64_t y0 = 0; y0 < h; ++y0) {
        for (std::int64_t x0 = 0; x0 < w; ++x0) {
            const std::int64_t seed = y0 * w + x0;
            if (!mask.bits[seed] || label[seed] >= 0) continue;

            // flood fill one 8-connected component
            const std::int32_t id = next_label++;
            stack.assign(1, seed);
            label[seed] = id;
            std::int64_t area = 0;
            double mass = 0.0, wx = 0.0, wy = 0.0, sx = 0.0, sy = 0.0;
            while (!stack.empty()) {
                const std::int64_t p = stack.back();
                stack.pop_back();
                const std::int64_t y = p / w, x = p % w;
                ++area;
                const double v = volume.at(mask.frame, mask.depth, y, x);
                mass += v;
                wx += v * double(x);
                wy += v * double(y);
                sx += double(x);
                sy += double(y);
                for (std::int64_t dy = -1; dy <= 1; ++dy) {
                    for (std::int64_t dx = -1; dx <= 1; ++dx) {
                        const std::int64_t yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        const std::int64_t q = yy * w + xx;
                        if (mask.bits[q] && label[q] < 0) {
                            label[q] = id;
                            stack.push_back(q);
                        }
                    }
                }
            }
            if (area < params.min_area) continue;

            Particle2D particle;
            particle.area = area;
            particle.depth = mask.depth;
            particle.frame = mask.frame;
            particle.mass = mass;
            if (mass > 0.0) {
                particle.x = wx / mass;
                particle.y = wy / mass;
            } else {
                particle.x = sx / double(area);
                particle.y = sy / double(area);
            }
            out.push_back(particle);
        }
    }
    return out;
}

std::vector<Detection3D> consolidate_3d(const std::vector<Particle2D>& particles,
                                        const DetectParams& params) {
    const std::size_t n = particles.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    auto unite = [&](std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    };

    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::llabs(particles[i].depth - particles[j].depth) != 1) continue;
            const double dx = particles[i].x - particles[j].x;
            const double dy = particles[i].y - particles[j].y;
            if (std::sqrt(dx * dx + dy * dy) <= params.z_link_radius) unite(i, j);
        }
    }

    struct Accum {
        double mass = 0.0, wx = 0.0, wy = 0.0, wz = 0.0;
        double sx = 0.0, sy = 0.0, sz = 0.0;
        std::int64_t voxels = 0, members = 0;
        std::int64_t frame = 0;
    };
    std::map<std::size_t, Accum> groups;
    for (std::size_t i = 0; i < n; ++i) {
        Accum& g = groups[find(i)];
        const Particle2D& p = particles[i];
        g.mass += p.mass;
        g.wx += p.mass * p.x;
        g.wy += p.mass * p.y;
        g.wz += p.mass * double(p.depth);
        g.sx += p.x;
        g.sy += p.y;
        g.sz += double(p.depth);
        g.voxels += p.area;
        g.members += 1;
        g.frame = p.frame;
    }

    std::vector<Detection3D> out;
    out.reserve(groups.size());
    for (const auto& [root, g] : groups) {
        Detection3D d;
        d.frame = g.frame;
        d.total_mass = g.mass;
        d.voxel_count = g.voxels;
        if (g.mass > 0.0)
            d.center = Vec3(g.wx / g.mass, g.wy / g.mass, g.wz / g.mass);
        else
            d.center = Vec3(g.sx / double(g.members), g.sy / double(g.members),
                            g.sz / double(g.members));
        out.push_back(d);
    }
    std::sort(out.begin(), out.end(), [](const Detection3D& a, const Detection3D& b) {
        if (a.center.z() != b.center.z()) return a.center.z() < b.center.z();
        if (a.center.y() != b.center.y()) return a.center.y() < b.center.y();
        return a.center.x() < b.center.x();
    });
    return out;
}

std::vector<Detection3D> detect_frame(const Volume4D& volume, std::int64_t t,
                                      const DetectParams& params, int workers) {
    if (t < 0 || t >= volume.frames())
        throw DataError("frame index " + std::to_string(t) + " out of range");
    params.validate();

    const auto plan = parallel::plan_frames(volume.depth(), 1);
    auto per_slice = parallel::run(
        plan,
        [&](parallel::ChunkRange chunk) {
            std::vector<Particle2D> acc;
            for (std::int64_t z = chunk.begin; z < chunk.end; ++z) {
                const SliceMask mask = preprocess_slice(volume, t, z, params);
                auto found = extract_particles(mask, volume, params);
                acc.insert(acc.end(), found.begin(), found.end());
            }
            return acc;
        },
        workers);

    std::vector<Particle2D> all;
    for (auto& chunk : per_slice) all.insert(all.end(), chunk.begin(), chunk.end());
    return consolidate_3d(all, params);
}

}  // namespace mtk
