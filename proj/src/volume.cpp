#include "mtk/volume.hpp"

#include "mtk/image_io.hpp"
#include "mtk/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <regex>

namespace mtk {

namespace {

constexpr char kMagic[8] = {'M', 'T', 'K', '4', 'V', 'O', 'L', '\0'};

void put_u64le(std::ofstream& out, std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64le(std::ifstream& in, const std::filesystem::path& path) {
    std::uint8_t b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw DataError("truncated container header: " + path.string());
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

// Normalize in place by the global maximum. max == 1 volumes pass through
// bit-identically, so writing and re-loading a normalized volume is exact.
void normalize_global_max(Volume4D& v) {
    float mx = 0.0f;
    for (float x : v.data) mx = std::max(mx, x);
    if (mx > 0.0f && mx != 1.0f) {
        for (float& x : v.data) x /= mx;
    }
}

}  // namespace

void Volume4D::validate() const {
    for (int i = 0; i < 4; ++i)
        if (dims[i] < 1)
            throw DataError("volume dims must all be >= 1, got (" + std::to_string(dims[0]) + "," +
                            std::to_string(dims[1]) + "," + std::to_string(dims[2]) + "," +
                            std::to_string(dims[3]) + ")");
    if (data.size() != voxel_count())
        throw DataError("volume payload length " + std::to_string(data.size()) +
                        " does not match dims product " + std::to_string(voxel_count()));
}

std::string to_string(Phenotype p) {
    switch (p) {
        case Phenotype::helical: return "helical";
        case Phenotype::erratic_semicircular: return "erratic-semicircular";
        case Phenotype::corkscrew_linear: return "corkscrew-linear";
    }
    return "unknown";
}

Phenotype phenotype_from_string(const std::string& s) {
    if (s == "helical") return Phenotype::helical;
    if (s == "erratic-semicircular") return Phenotype::erratic_semicircular;
    if (s == "corkscrew-linear") return Phenotype::corkscrew_linear;
    throw DataError("unknown phenotype: " + s);
}

void SynthSpec::validate() const {
    for (int i = 0; i < 4; ++i)
        if (dims[i] < 1) throw ConfigError("synthetic dims must all be >= 1");
    if (helical_count < 0 || erratic_count < 0 || corkscrew_count < 0)
        throw ConfigError("phenotype counts must be >= 0");
    if (blob_sigma <= 0.0) throw ConfigError("blob sigma must be > 0");
    if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (peak_intensity < 0.0 || peak_intensity > 1.0)
        throw ConfigError("peak intensity must lie in [0, 1]");
}

// ---------------------------------------------------------------------------
// Raw container
// ---------------------------------------------------------------------------

void write_raw(const Volume4D& volume, const std::filesystem::path& path) {
    volume.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out.write(kMagic, 8);
    for (auto d : volume.dims) put_u64le(out, static_cast<std::uint64_t>(d));
    static_assert(sizeof(float) == 4);
    // float32 little-endian payload; x86/arm little-endian hosts write directly
    if constexpr (std::endian::native == std::endian::little) {
        out.write(reinterpret_cast<const char*>(volume.data.data()),
                  static_cast<std::streamsize>(volume.data.size() * 4));
    } else {
        for (float f : volume.data) {
            std::uint32_t u;
            std::memcpy(&u, &f, 4);
            std::uint8_t b[4] = {std::uint8_t(u & 0xff), std::uint8_t((u >> 8) & 0xff),
                                 std::uint8_t((u >> 16) & 0xff), std::uint8_t(u >> 24)};
            out.write(reinterpret_cast<const char*>(b), 4);
        }
    }
    if (!out) throw DataError("write failed: " + path.string());
}

Volume4D read_raw(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open container: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw DataError("bad container magic: " + path.string());

    Volume4D v;
    for (auto& d : v.dims) d = static_cast<std::int64_t>(get_u64le(in, path));
    for (auto d : v.dims)
        if (d < 1) throw DataError("corrupt container: nonpositive dim in " + path.string());

    const std::size_t n = v.voxel_count();
    const auto header_end = in.tellg();
    in.seekg(0, std::ios::end);
    const std::size_t payload = static_cast<std::size_t>(in.tellg() - header_end);
    if (payload != n * 4)
        throw DataError("corrupt container: dims promise " + std::to_string(n * 4) +
                        " payload bytes but file has " + std::to_string(payload) + ": " +
                        path.string());
    in.seekg(header_end);

    v.data.resize(n);
    if constexpr (std::endian::native == std::endian::little) {
        in.read(reinterpret_cast<char*>(v.data.data()), static_cast<std::streamsize>(n * 4));
    } else {
        std::vector<std::uint8_t> raw(n * 4);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * 4));
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t u = std::uint32_t(raw[4 * i]) | (std::uint32_t(raw[4 * i + 1]) << 8) |
                              (std::uint32_t(raw[4 * i + 2]) << 16) |
                              (std::uint32_t(raw[4 * i + 3]) << 24);
            std::memcpy(&v.data[i], &u, 4);
        }
    }
    if (!in) throw DataError("short read on container payload: " + path.string());
    return v;
}

// ---------------------------------------------------------------------------
// Slice-stack loading
// ---------------------------------------------------------------------------

namespace {

std::regex layout_to_regex(const std::string& layout, bool& t_first) {
    const auto tpos = layout.find("{t}");
    const auto zpos = layout.find("{z}");
    if (tpos == std::string::npos || zpos == std::string::npos)
        throw ConfigError("layout pattern must contain both {t} and {z}: " + layout);
    t_first = tpos < zpos;

    std::string rx;
    for (std::size_t i = 0; i < layout.size();) {
        if (layout.compare(i, 3, "{t}") == 0 || layout.compare(i, 3, "{z}") == 0) {
            rx += "(\\d+)";
            i += 3;
        } else {
            if (std::strchr(".^$|()[]{}*+?\\", layout[i])) rx += '\\';
            rx += layout[i];
            ++i;
        }
    }
    return std::regex(rx);
}

Volume4D load_from_directory(const std::filesystem::path& dir, const std::string& layout) {
    bool t_first = true;
    const std::regex rx = layout_to_regex(layout, t_first);

    std::map<std::pair<std::int64_t, std::int64_t>, std::filesystem::path> slices;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        std::smatch m;
        if (!std::regex_match(name, m, rx)) continue;
        const std::int64_t a = std::stoll(m[1].str());
        const std::int64_t b = std::stoll(m[2].str());
        const auto key = t_first ? std::make_pair(a, b) : std::make_pair(b, a);
        if (!slices.emplace(key, entry.path()).second)
            throw DataError("duplicate slice for t=" + std::to_string(key.first) +
                            " z=" + std::to_string(key.second) + " in " + dir.string());
    }
    if (slices.empty()) throw DataError("no slices found in " + dir.string() +
                                        " matching layout '" + layout + "'");

    std::int64_t t_min = slices.begin()->first.first, t_max = t_min;
    std::int64_t z_min = slices.begin()->first.second, z_max = z_min;
    for (const auto& [key, path] : slices) {
        t_min = std::min(t_min, key.first);
        t_max = std::max(t_max, key.first);
        z_min = std::min(z_min, key.second);
        z_max = std::max(z_max, key.second);
    }
    const std::int64_t T = t_max - t_min + 1;
    const std::int64_t Z = z_max - z_min + 1;
    for (std::int64_t t = t_min; t <= t_max; ++t)
        for (std::int64_t z = z_min; z <= z_max; ++z)
            if (!slices.count({t, z}))
                throw DataError("missing slice t=" + std::to_string(t) + " z=" + std::to_string(z) +
                                " in " + dir.string());

    Volume4D v;
    bool first = true;
    for (const auto& [key, path] : slices) {
        const SliceImage img = read_slice_image(path);
        if (first) {
            v.dims = {T, Z, img.height, img.width};
            v.data.assign(v.voxel_count(), 0.0f);
            first = false;
        } else if (img.height != v.dims[2] || img.width != v.dims[3]) {
            throw DataError("inconsistent slice dimensions: " + path.string() + " is " +
                            std::to_string(img.height) + "x" + std::to_string(img.width) +
                            " but the stack started as " + std::to_string(v.dims[2]) + "x" +
                            std::to_string(v.dims[3]));
        }
        std::copy(img.pixels.begin(), img.pixels.end(),
                  v.data.begin() + v.index(key.first - t_min, key.second - z_min, 0, 0));
    }
    return v;
}

}  // namespace

Volume4D load_stack(const std::filesystem::path& root, const std::string& layout) {
    Volume4D v;
    if (std::filesystem::is_directory(root)) {
        v = load_from_directory(root, layout);
    } else if (std::filesystem::is_regular_file(root)) {
        v = read_raw(root);
        for (float x : v.data)
            if (!(x >= 0.0f) || !std::isfinite(x))
                throw DataError("corrupt container: negative or non-finite intensity in " +
                                root.string());
    } else {
        throw DataError("input path does not exist: " + root.string());
    }
    normalize_global_max(v);
    v.validate();
    return v;
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

namespace {

struct Bounds {
    Vec3 lo, hi;  // inclusive feasible box for blob centers, (x, y, z)
};

// Keeps blob support essentially inside the volume so centroids stay analytic.
Bounds center_bounds(const SynthSpec& spec) {
    const double margin = 1.0 + 3.0 * spec.blob_sigma;
    Bounds b;
    b.lo = Vec3(margin, margin, margin);
    b.hi = Vec3(double(spec.dims[3] - 1) - margin, double(spec.dims[2] - 1) - margin,
                double(spec.dims[1] - 1) - margin);
    for (int i = 0; i < 3; ++i)
        if (b.hi[i] < b.lo[i])
            throw DataError("volume too small for blob sigma " + std::to_string(spec.blob_sigma) +
                            ": trajectories would exit the volume");
    return b;
}

// Every synthetic cell rides a shared slow circulation around the arena
// center — close to one full turn over a 61-frame clip — and adds its
// phenotype's signature cycle on top:
//
//   helical               fast co-rotating loop; steady linear rise/fall in z
//   erratic-semicircular  a half-circle against the flow spread over the
//                         whole clip, with seeded sample jitter
//   corkscrew-linear      tight high-rate coil around its (slowly carried)
//                         straight travel line; the strongest z drift
//
// The circulation stands in for static placement offsets: cells are placed as
// antipodal pairs, so the population mean sits at the arena center in every
// frame and downstream mean-centering injects no constant mode. Each x-y path
// is then a sum of exactly two damped rotations, which a short clip pins down
// exactly; same-phenotype cells share every structural constant and differ
// only in amplitude, phase, arm, and z drift, so their fitted dynamics agree
// instead of differing by arbitrary noise-shaped leftovers.
constexpr double kSwirlRho = 0.997;   // circulation decay per frame
constexpr double kSwirlOmega = 0.16;  // circulation rate, rad/frame
constexpr double kArmLo = 10.0;       // circulation arm range at design scale
constexpr double kArmHi = 44.0;
constexpr double kDesignRoom = 49.5;  // arm + widest signature, design scale

struct MotionParams {
    double rho;             // signature-cycle decay per frame
    double omega;           // signed signature rate, rad/frame (sign = handedness)
    double amp_lo, amp_hi;  // signature radius range, voxels
    double vz_lo, vz_hi;    // |z drift| per frame
    double jitter;          // seeded x-y sample jitter, voxels
};

MotionParams motion_params(Phenotype ph, std::int64_t frames) {
    switch (ph) {
        case Phenotype::helical:
            return {0.996, 0.65, 3.0, 4.5, 0.020, 0.035, 0.0};
        case Phenotype::erratic_semicircular:
            return {0.998, -M_PI / double(std::max<std::int64_t>(frames - 1, 8)),
                    3.5, 5.0, 0.005, 0.015, 0.08};
        case Phenotype::corkscrew_linear:
            return {0.996, 1.50, 1.5, 2.0, 0.030, 0.040, 0.0};
    }
    throw DataError("unknown phenotype");
}

double reach_of(const MotionParams& p) { return p.amp_hi + 3.0 * p.jitter; }

struct CellPlan {
    double off_x = 0.0, off_y = 0.0;  // circulation arm at t = 0, about center
    int layer = 0;                    // index into the depth-band list
};

// Antipodal-pair rejection placement. Lateral clearance is only enforced
// within a depth band (cross-band cells are kept apart by z); the clearance
// is inflated by the circulation decay so cells that start separated remain
// separated as their orbits shrink. Exhausting the try budget reshuffles the
// band assignment and restarts, keeping the whole layout a pure function of
// the seed.
std::vector<CellPlan> plan_cells(const std::vector<MotionParams>& mp, double scale,
                                 double blob_sigma, double dec_min, int bands, Rng& rng) {
    const std::size_t m = mp.size();
    const std::size_t half = (m + 1) / 2;
    std::vector<CellPlan> plan(m);
    for (int restart = 0; restart < 64; ++restart) {
        std::vector<int> band(m);
        for (std::size_t i = 0; i < m; ++i) band[i] = int(i % bands);
        for (std::size_t i = m; i > 1; --i)
            std::swap(band[i - 1], band[rng.uniform_int(0, std::int64_t(i) - 1)]);

        bool exhausted = false;
        int tries = 0;
        for (std::size_t j = 0; j < half && !exhausted; ++j) {
            const std::size_t i1 = 2 * j, i2 = 2 * j + 1;
            for (;;) {
                if (++tries > 20000) {
                    exhausted = true;
                    break;
                }
                const double vx = rng.uniform(-kArmHi, kArmHi) * scale;
                const double vy = rng.uniform(-kArmHi, kArmHi) * scale;
                const double arm = std::hypot(vx, vy);
                if (arm < kArmLo * scale || arm > kArmHi * scale) continue;
                bool ok = true;
                const std::size_t cand = i2 < m ? 2 : 1;
                for (std::size_t c = 0; c < cand && ok; ++c) {
                    const std::size_t in = c == 0 ? i1 : i2;
                    const double wx = c == 0 ? vx : -vx;
                    const double wy = c == 0 ? vy : -vy;
                    for (std::size_t io = 0; io < 2 * j; ++io) {
                        if (band[io] != band[in]) continue;
                        // 4.3 sigma keeps the summed intensity between two
                        // peaks below detection thresholds (no mask merging)
                        const double sep = (4.3 * blob_sigma +
                                            (reach_of(mp[io]) + reach_of(mp[in])) * scale) /
                                           dec_min;
                        if (std::hypot(plan[io].off_x - wx, plan[io].off_y - wy) < sep) {
                            ok = false;
                            break;
                        }
                    }
                }
                if (ok) {
                    plan[i1] = {vx, vy, band[i1]};
                    if (i2 < m) plan[i2] = {-vx, -vy, band[i2]};
                    break;
                }
            }
        }
        if (!exhausted) return plan;
    }
    throw DataError("unable to place synthetic cells without collisions; volume too crowded");
}

void render_blob(Volume4D& v, std::int64_t t, const Vec3& c, double sigma, double peak) {
    const double support = 4.0 * sigma;
    const std::int64_t x0 = std::max<std::int64_t>(0, std::int64_t(std::ceil(c.x() - support)));
    const std::int64_t x1 = std::min(v.dims[3] - 1, std::int64_t(std::floor(c.x() + support)));
    const std::int64_t y0 = std::max<std::int64_t>(0, std::int64_t(std::ceil(c.y() - support)));
    const std::int64_t y1 = std::min(v.dims[2] - 1, std::int64_t(std::floor(c.y() + support)));
    const std::int64_t z0 = std::max<std::int64_t>(0, std::int64_t(std::ceil(c.z() - support)));
    const std::int64_t z1 = std::min(v.dims[1] - 1, std::int64_t(std::floor(c.z() + support)));
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (std::int64_t z = z0; z <= z1; ++z) {
        const double dz2 = (double(z) - c.z()) * (double(z) - c.z());
        for (std::int64_t y = y0; y <= y1; ++y) {
            const double dy2 = (double(y) - c.y()) * (double(y) - c.y());
            for (std::int64_t x = x0; x <= x1; ++x) {
                const double dx2 = (double(x) - c.x()) * (double(x) - c.x());
                v.at(t, z, y, x) += float(peak * std::exp(-(dx2 + dy2 + dz2) * inv2s2));
            }
        }
    }
}

}  // namespace

std::pair<Volume4D, GroundTruth> generate_synthetic(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    Volume4D volume;
    volume.dims = spec.dims;
    volume.data.assign(volume.voxel_count(), 0.0f);

    GroundTruth truth;
    const int total = spec.helical_count + spec.erratic_count + spec.corkscrew_count;
    if (total > 0) {
        const Bounds b = center_bounds(spec);
        const std::int64_t T = spec.dims[0];

        std::vector<Phenotype> order;
        order.insert(order.end(), spec.helical_count, Phenotype::helical);
        order.insert(order.end(), spec.erratic_count, Phenotype::erratic_semicircular);
        order.insert(order.end(), spec.corkscrew_count, Phenotype::corkscrew_linear);
        std::vector<MotionParams> mp;
        double vz_cap = 0.0;
        for (Phenotype ph : order) {
            mp.push_back(motion_params(ph, T));
            vz_cap = std::max(vz_cap, mp.back().vz_hi);
        }

        const double cx = 0.5 * (b.lo.x() + b.hi.x());
        const double cy = 0.5 * (b.lo.y() + b.hi.y());
        const double room = std::min(b.hi.x() - cx, b.hi.y() - cy);
        const double scale = std::min(1.0, room / kDesignRoom);

        // Two depth bands when the volume is deep enough to keep them apart
        // even after their z drifts; otherwise everything shares mid-depth
        // and lateral clearance applies across the whole population.
        const double zspan = b.hi.z() - b.lo.z();
        const double drift_ext = 0.8 + vz_cap * double(T - 1);
        std::vector<double> band_z;
        if (zspan >= 2.0 * drift_ext + 4.5 * spec.blob_sigma)
            band_z = {b.lo.z() + 0.4, b.hi.z() - 0.4};
        else
            band_z = {0.5 * (b.lo.z() + b.hi.z())};

        const double dec_min =
            std::max(std::pow(kSwirlRho, double(std::max<std::int64_t>(T - 1, 0))), 0.5);
        const std::vector<CellPlan> plan =
            plan_cells(mp, scale, spec.blob_sigma, dec_min, int(band_z.size()), rng);

        for (int i = 0; i < total; ++i) {
            const MotionParams& p = mp[i];
            const double phase = rng.uniform(0.0, 2.0 * M_PI);
            const double amp = rng.uniform(p.amp_lo, p.amp_hi) * scale;
            const double z0 = band_z[plan[i].layer] + rng.uniform(-0.4, 0.4);
            double vz_dir;
            if (band_z.size() == 2)
                vz_dir = plan[i].layer == 0 ? 1.0 : -1.0;  // drift toward mid-depth
            else
                vz_dir = rng.uniform01() < 0.5 ? -1.0 : 1.0;
            double vz = rng.uniform(p.vz_lo, p.vz_hi);
            if (T > 1) {
                const double room_z = vz_dir > 0.0 ? b.hi.z() - z0 : z0 - b.lo.z();
                vz = std::min(vz, std::max(0.0, room_z) / double(T - 1));
            }

            std::vector<Vec3> path(static_cast<std::size_t>(T));
            for (std::int64_t t = 0; t < T; ++t) {
                const double dec = std::pow(kSwirlRho, double(t));
                const double a = kSwirlOmega * double(t);
                const double sx = dec * (plan[i].off_x * std::cos(a) - plan[i].off_y * std::sin(a));
                const double sy = dec * (plan[i].off_x * std::sin(a) + plan[i].off_y * std::cos(a));
                const double rad = amp * std::pow(p.rho, double(t));
                const double ang = p.omega * double(t) + phase;
                double x = cx + sx + rad * std::cos(ang);
                double y = cy + sy + rad * std::sin(ang);
                if (p.jitter > 0.0) {
                    x += p.jitter * rng.gaussian();
                    y += p.jitter * rng.gaussian();
                }
                path[t] = Vec3(std::clamp(x, b.lo.x(), b.hi.x()),
                               std::clamp(y, b.lo.y(), b.hi.y()),
                               std::clamp(z0 + vz_dir * vz * double(t), b.lo.z(), b.hi.z()));
            }
            truth.trajectories.push_back({order[i], std::move(path)});
        }

        for (const auto& traj : truth.trajectories)
            for (std::int64_t t = 0; t < T; ++t)
                render_blob(volume, t, traj.centers[t], spec.blob_sigma, spec.peak_intensity);
    }

    if (spec.noise_sigma > 0.0) {
        for (float& x : volume.data)
            x += float(spec.noise_sigma * rng.gaussian());
    }
    for (float& x : volume.data) x = std::clamp(x, 0.0f, 1.0f);

    return {std::move(volume), std::move(truth)};
}

}  // namespace mtk
