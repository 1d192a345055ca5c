#include "mtk/pipeline.hpp"

#include <Eigen/Core>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "mtk/parallel.hpp"

namespace mtk {

namespace {

using Json = nlohmann::ordered_json;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects an integer, got '" + value + "'");
    }
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + value + "'");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_manifest(const PipelineConfig& config, const std::string& stage, double seconds) {
    Json manifest;
    manifest["stage"] = stage;
    manifest["config_hash"] = config_hash(config);
    manifest["seed"] = config.seed;
    manifest["workers"] = config.workers;
    manifest["versions"] = {
        {"mtk", "0.1.0"},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
    };
    manifest["timings"] = {{"seconds", seconds}};
    auto out = open_out(std::filesystem::path(config.out_dir) / ("manifest_" + stage + ".json"));
    out << manifest.dump(2) << "\n";
}

class StageTimer {
   public:
    StageTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

   private:
    std::chrono::steady_clock::time_point start_;
};

Volume4D load_input_volume(const PipelineConfig& config) {
    if (!config.input_path.empty())
        return load_stack(config.input_path, config.input_layout);
    return load_stack(std::filesystem::path(config.out_dir) / "volume.mtkvol");
}

struct CorpusFiles {
    TrajectoryCorpus corpus;
};

CorpusFiles read_corpus(const PipelineConfig& config) {
    const std::filesystem::path dir(config.out_dir);
    CorpusFiles files;
    files.corpus.X = read_matrix_csv(dir / "corpus_x.csv");
    files.corpus.Y = read_matrix_csv(dir / "corpus_y.csv");
    files.corpus.Z = read_matrix_csv(dir / "corpus_z.csv");
    if (files.corpus.Y.rows() != files.corpus.X.rows() ||
        files.corpus.Z.rows() != files.corpus.X.rows() ||
        files.corpus.Y.cols() != files.corpus.X.cols() ||
        files.corpus.Z.cols() != files.corpus.X.cols())
        throw DataError("corpus coordinate matrices disagree in shape");

    const MatX index = read_matrix_csv(dir / "corpus_index.csv");
    if (index.rows() != files.corpus.X.rows() || index.cols() != 2)
        throw DataError("corpus_index.csv must have one (row, track_id) line per corpus row");
    for (std::int64_t i = 0; i < index.rows(); ++i)
        files.corpus.track_ids.push_back(static_cast<std::int64_t>(index(i, 1)));
    return files;
}

}  // namespace

void PipelineConfig::validate() const {
    synth.validate();
    detect.validate();
    track.validate();
    if (ar_order < 1) throw ConfigError("ar.d must be >= 1");
    if (latent_dim < 1 || latent_dim > 3) throw ConfigError("ar.n must be 1..3");
    if (track.target_length < ar_order + latent_dim * ar_order + 1)
        throw ConfigError("track.length too short for the AR order: need at least " +
                          std::to_string(ar_order + latent_dim * ar_order + 1) + " frames");
    if (beta <= 0.0) throw ConfigError("kernel.beta must be > 0");
    if (pair_tile < 1) throw ConfigError("kernel.tile must be >= 1");
    if (k < 0) throw ConfigError("cluster.k must be positive or 'auto'");
    if (k == 0 && k_max < 2) throw ConfigError("cluster.k=auto requires cluster.k_max >= 2");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (out_dir.empty()) throw ConfigError("output directory must be set");
}

void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
    if (key == "input.path") {
        config.input_path = value;
    } else if (key == "input.layout") {
        config.input_layout = value;
    } else if (key == "synth.frames") {
        config.synth.dims[0] = parse_int(key, value);
    } else if (key == "synth.depth") {
        config.synth.dims[1] = parse_int(key, value);
    } else if (key == "synth.height") {
        config.synth.dims[2] = parse_int(key, value);
    } else if (key == "synth.width") {
        config.synth.dims[3] = parse_int(key, value);
    } else if (key == "synth.helical") {
        config.synth.helical_count = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.erratic") {
        config.synth.erratic_count = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.corkscrew") {
        config.synth.corkscrew_count = static_cast<int>(parse_int(key, value));
    } else if (key == "synth.blob_sigma") {
        config.synth.blob_sigma = parse_double(key, value);
    } else if (key == "synth.peak") {
        config.synth.peak_intensity = parse_double(key, value);
    } else if (key == "synth.noise") {
        config.synth.noise_sigma = parse_double(key, value);
    } else if (key == "detect.median_radius") {
        config.detect.median_radius = static_cast<int>(parse_int(key, value));
    } else if (key == "detect.mode") {
        if (value == "otsu")
            config.detect.mode = ThresholdMode::otsu;
        else if (value == "fixed")
            config.detect.mode = ThresholdMode::fixed;
        else
            throw ConfigError("detect.mode must be 'otsu' or 'fixed', got '" + value + "'");
    } else if (key == "detect.threshold") {
        config.detect.fixed_threshold = parse_double(key, value);
    } else if (key == "detect.min_area") {
        config.detect.min_area = static_cast<int>(parse_int(key, value));
    } else if (key == "detect.z_link") {
        config.detect.z_link_radius = parse_double(key, value);
    } else if (key == "track.gate") {
        config.track.gate_radius = parse_double(key, value);
    } else if (key == "track.min_length") {
        config.track.min_length = parse_int(key, value);
    } else if (key == "track.length") {
        config.track.target_length = parse_int(key, value);
    } else if (key == "ar.d") {
        config.ar_order = parse_int(key, value);
    } else if (key == "ar.n") {
        config.latent_dim = parse_int(key, value);
    } else if (key == "kernel.beta") {
        config.beta = parse_double(key, value);
    } else if (key == "kernel.tile") {
        config.pair_tile = parse_int(key, value);
    } else if (key == "cluster.k") {
        if (value == "auto")
            config.k = 0;
        else
            config.k = parse_int(key, value);
    } else if (key == "cluster.k_max") {
        config.k_max = parse_int(key, value);
    } else if (key == "seed") {
        config.seed = static_cast<std::uint64_t>(parse_int(key, value));
        config.synth.seed = config.seed;
    } else if (key == "workers") {
        config.workers = static_cast<int>(parse_int(key, value));
    } else if (key == "out") {
        config.out_dir = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

PipelineConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    PipelineConfig config;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not a key=value pair: '" + line + "'");
        apply_config_entry(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return config;
}

std::string serialize_config(const PipelineConfig& c) {
    std::ostringstream ss;
    ss << "input.path=" << c.input_path << "\n";
    ss << "input.layout=" << c.input_layout << "\n";
    ss << "synth.frames=" << c.synth.dims[0] << "\n";
    ss << "synth.depth=" << c.synth.dims[1] << "\n";
    ss << "synth.height=" << c.synth.dims[2] << "\n";
    ss << "synth.width=" << c.synth.dims[3] << "\n";
    ss << "synth.helical=" << c.synth.helical_count << "\n";
    ss << "synth.erratic=" << c.synth.erratic_count << "\n";
    ss << "synth.corkscrew=" << c.synth.corkscrew_count << "\n";
    ss << "synth.blob_sigma=" << fmt_double(c.synth.blob_sigma) << "\n";
    ss << "synth.peak=" << fmt_double(c.synth.peak_intensity) << "\n";
    ss << "synth.noise=" << fmt_double(c.synth.noise_sigma) << "\n";
    ss << "detect.median_radius=" << c.detect.median_radius << "\n";
    ss << "detect.mode=" << (c.detect.mode == ThresholdMode::otsu ? "otsu" : "fixed") << "\n";
    ss << "detect.threshold=" << fmt_double(c.detect.fixed_threshold) << "\n";
    ss << "detect.min_area=" << c.detect.min_area << "\n";
    ss << "detect.z_link=" << fmt_double(c.detect.z_link_radius) << "\n";
    ss << "track.gate=" << fmt_double(c.track.gate_radius) << "\n";
    ss << "track.min_length=" << c.track.min_length << "\n";
    ss << "track.length=" << c.track.target_length << "\n";
    ss << "ar.d=" << c.ar_order << "\n";
    ss << "ar.n=" << c.latent_dim << "\n";
    ss << "kernel.beta=" << fmt_double(c.beta) << "\n";
    ss << "kernel.tile=" << c.pair_tile << "\n";
    if (c.k == 0)
        ss << "cluster.k=auto\n";
    else
        ss << "cluster.k=" << c.k << "\n";
    ss << "cluster.k_max=" << c.k_max << "\n";
    ss << "seed=" << c.seed << "\n";
    ss << "workers=" << c.workers << "\n";
    ss << "out=" << c.out_dir << "\n";
    return ss.str();
}

std::string config_hash(const PipelineConfig& config) {
    const std::string text = serialize_config(config);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Artifact helpers
// ---------------------------------------------------------------------------

void write_matrix_csv(const std::filesystem::path& path, const MatX& m) {
    auto out = open_out(path);
    for (std::int64_t i = 0; i < m.rows(); ++i) {
        for (std::int64_t j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << fmt_double(m(i, j));
        }
        out << '\n';
    }
}

MatX read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(trim(cell), &pos);
                if (pos != trim(cell).size()) throw std::invalid_argument("trailing characters");
                row.push_back(v);
            } catch (const std::exception&) {
                throw DataError("non-numeric cell '" + trim(cell) + "' in " + path.string());
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataError("ragged CSV row in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("empty CSV: " + path.string());
    MatX m(static_cast<std::int64_t>(rows.size()), static_cast<std::int64_t>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
    return m;
}

void write_models_json(const std::filesystem::path& path, const std::vector<ARModel>& models) {
    Json doc = Json::array();
    for (const auto& model : models) {
        Json entry;
        entry["trajectory_id"] = model.trajectory_id;
        entry["n"] = model.n();
        entry["d"] = model.d();
        entry["residual_rms"] = model.residual_rms;
        Json blocks = Json::array();
        for (const auto& B : model.B) {
            Json flat = Json::array();
            for (std::int64_t r = 0; r < B.rows(); ++r)
                for (std::int64_t c = 0; c < B.cols(); ++c) flat.push_back(B(r, c));
            blocks.push_back(std::move(flat));
        }
        entry["B"] = std::move(blocks);
        doc.push_back(std::move(entry));
    }
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

std::vector<ARModel> read_models_json(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
    if (!doc.is_array()) throw DataError("models JSON must be an array: " + path.string());

    std::vector<ARModel> models;
    for (const auto& entry : doc) {
        ARModel model;
        model.trajectory_id = entry.at("trajectory_id").get<std::int64_t>();
        model.residual_rms = entry.at("residual_rms").get<double>();
        const std::int64_t n = entry.at("n").get<std::int64_t>();
        const std::int64_t d = entry.at("d").get<std::int64_t>();
        const auto& blocks = entry.at("B");
        if (static_cast<std::int64_t>(blocks.size()) != d)
            throw DataError("model " + std::to_string(model.trajectory_id) + " in " +
                            path.string() + " has " + std::to_string(blocks.size()) +
                            " matrices, expected d=" + std::to_string(d));
        for (const auto& flat : blocks) {
            if (static_cast<std::int64_t>(flat.size()) != n * n)
                throw DataError("model matrix size mismatch in " + path.string());
            MatX B(n, n);
            std::int64_t idx = 0;
            for (std::int64_t r = 0; r < n; ++r)
                for (std::int64_t c = 0; c < n; ++c) B(r, c) = flat[idx++].get<double>();
            model.B.push_back(std::move(B));
        }
        models.push_back(std::move(model));
    }
    return models;
}

void write_projection_json(const std::filesystem::path& path, const ProjectionMatrix& proj) {
    Json doc;
    doc["p"] = proj.p();
    doc["n"] = proj.n();
    Json c_flat = Json::array();
    for (std::int64_t r = 0; r < proj.p(); ++r)
        for (std::int64_t c = 0; c < proj.n(); ++c) c_flat.push_back(proj.C(r, c));
    doc["C"] = std::move(c_flat);
    Json mean = Json::array();
    for (std::int64_t r = 0; r < proj.mean.size(); ++r) mean.push_back(proj.mean(r));
    doc["mean"] = std::move(mean);
    auto out = open_out(path);
    out << doc.dump(2) << "\n";
}

ProjectionMatrix read_projection_json(const std::filesystem::path& path) {
    Json doc;
    try {
        doc = Json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path.string() + ": " + e.what());
    }
    ProjectionMatrix proj;
    const std::int64_t p = doc.at("p").get<std::int64_t>();
    const std::int64_t n = doc.at("n").get<std::int64_t>();
    const auto& c_flat = doc.at("C");
    if (static_cast<std::int64_t>(c_flat.size()) != p * n)
        throw DataError("projection matrix size mismatch in " + path.string());
    proj.C.resize(p, n);
    std::int64_t idx = 0;
    for (std::int64_t r = 0; r < p; ++r)
        for (std::int64_t c = 0; c < n; ++c) proj.C(r, c) = c_flat[idx++].get<double>();
    const auto& mean = doc.at("mean");
    if (static_cast<std::int64_t>(mean.size()) != p)
        throw DataError("projection mean size mismatch in " + path.string());
    proj.mean.resize(p);
    for (std::int64_t r = 0; r < p; ++r) proj.mean(r) = mean[r].get<double>();
    return proj;
}

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

void run_synth(const PipelineConfig& config) {
    config.validate();
    const StageTimer timer;
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    auto [volume, truth] = generate_synthetic(config.synth);
    write_raw(volume, dir / "volume.mtkvol");

    auto csv = open_out(dir / "ground_truth.csv");
    csv << "trajectory,phenotype,t,x,y,z\n";
    for (std::size_t i = 0; i < truth.trajectories.size(); ++i) {
        const auto& traj = truth.trajectories[i];
        for (std::size_t t = 0; t < traj.centers.size(); ++t) {
            csv << i << ',' << to_string(traj.phenotype) << ',' << t << ','
                << fmt_double(traj.centers[t].x()) << ',' << fmt_double(traj.centers[t].y()) << ','
                << fmt_double(traj.centers[t].z()) << '\n';
        }
    }
    csv.close();
    write_manifest(config, "synth", timer.seconds());
}

void run_track(const PipelineConfig& config) {
    config.validate();
    const StageTimer timer;
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    const Volume4D volume = load_input_volume(config);

    const auto plan = parallel::plan_frames(volume.frames(), 1);
    auto per_frame = parallel::run(
        plan,
        [&](parallel::ChunkRange chunk) {
            std::vector<std::vector<Detection3D>> out;
            for (std::int64_t t = chunk.begin; t < chunk.end; ++t)
                out.push_back(detect_frame(volume, t, config.detect, 1));
            return out;
        },
        config.workers);
    std::vector<std::vector<Detection3D>> frames;
    frames.reserve(static_cast<std::size_t>(volume.frames()));
    for (auto& chunk : per_frame)
        for (auto& dets : chunk) frames.push_back(std::move(dets));

    const std::vector<Track> tracks = build_tracks(frames, config.track);
    auto csv = open_out(dir / "tracks.csv");
    csv << "track_id,t,x,y,z\n";
    for (const auto& track : tracks)
        for (const auto& p : track.points)
            csv << track.id << ',' << p.t << ',' << fmt_double(p.x) << ',' << fmt_double(p.y)
                << ',' << fmt_double(p.z) << '\n';
    csv.close();

    const TrajectoryCorpus corpus = normalize_corpus(tracks, config.track);
    write_matrix_csv(dir / "corpus_x.csv", corpus.X);
    write_matrix_csv(dir / "corpus_y.csv", corpus.Y);
    write_matrix_csv(dir / "corpus_z.csv", corpus.Z);

    MatX index(corpus.m(), 2);
    for (std::int64_t i = 0; i < corpus.m(); ++i) {
        index(i, 0) = double(i);
        index(i, 1) = double(corpus.track_ids[static_cast<std::size_t>(i)]);
    }
    write_matrix_csv(dir / "corpus_index.csv", index);

    // interoperability export: corpus as a raw container, dims (3, m, L, 1)
    Volume4D container;
    container.dims = {3, corpus.m(), corpus.length(), 1};
    container.data.assign(container.voxel_count(), 0.0f);
    for (std::int64_t i = 0; i < corpus.m(); ++i) {
        for (std::int64_t t = 0; t < corpus.length(); ++t) {
            container.data[container.index(0, i, t, 0)] = static_cast<float>(corpus.X(i, t));
            container.data[container.index(1, i, t, 0)] = static_cast<float>(corpus.Y(i, t));
            container.data[container.index(2, i, t, 0)] = static_cast<float>(corpus.Z(i, t));
        }
    }
    write_raw(container, dir / "corpus.mtkvol");

    write_manifest(config, "track", timer.seconds());
}

void run_featurize(const PipelineConfig& config) {
    config.validate();
    const StageTimer timer;
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    const TrajectoryCorpus corpus = read_corpus(config).corpus;
    const ProjectionMatrix projection = fit_projection(corpus, config.latent_dim);

    const auto plan = parallel::plan_frames(corpus.m(), 32);
    auto chunks = parallel::run(
        plan,
        [&](parallel::ChunkRange chunk) {
            std::vector<ARModel> out;
            out.reserve(static_cast<std::size_t>(chunk.size()));
            for (std::int64_t i = chunk.begin; i < chunk.end; ++i) {
                const LatentTrajectory latent = project(corpus, i, projection);
                out.push_back(fit_ar(latent, config.ar_order,
                                     corpus.track_ids[static_cast<std::size_t>(i)]));
            }
            return out;
        },
        config.workers);
    std::vector<ARModel> models;
    models.reserve(static_cast<std::size_t>(corpus.m()));
    for (auto& chunk : chunks)
        for (auto& model : chunk) models.push_back(std::move(model));

    write_projection_json(dir / "projection.json", projection);
    write_models_json(dir / "models.json", models);
    write_manifest(config, "featurize", timer.seconds());
}

void run_cluster(const PipelineConfig& config) {
    config.validate();
    const StageTimer timer;
    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);

    const TrajectoryCorpus corpus = read_corpus(config).corpus;
    const ProjectionMatrix projection = read_projection_json(dir / "projection.json");
    const std::vector<ARModel> models = read_models_json(dir / "models.json");
    if (static_cast<std::int64_t>(models.size()) != corpus.m())
        throw DataError("model count " + std::to_string(models.size()) +
                        " does not match corpus size " + std::to_string(corpus.m()));

    std::vector<StateSpace> systems;
    systems.reserve(models.size());
    for (const auto& model : models) systems.push_back(companion_form(model, projection));

    const DistanceMatrix distances =
        pairwise_matrix(systems, config.workers, config.pair_tile);
    write_matrix_csv(dir / "distance.csv", distances.M);

    const AffinityMatrix affinity = heat_kernel(distances, config.beta);
    write_matrix_csv(dir / "affinity.csv", affinity.S);

    const auto matrix_container = [](const MatX& M) {
        Volume4D vol;
        vol.dims = {1, 1, M.rows(), M.cols()};
        vol.data.assign(vol.voxel_count(), 0.0f);
        for (std::int64_t r = 0; r < M.rows(); ++r)
            for (std::int64_t c = 0; c < M.cols(); ++c)
                vol.data[vol.index(0, 0, r, c)] = static_cast<float>(M(r, c));
        return vol;
    };
    write_raw(matrix_container(distances.M), dir / "distance.mtkvol");
    write_raw(matrix_container(affinity.S), dir / "affinity.mtkvol");

    Json kernel_meta;
    kernel_meta["beta"] = affinity.beta;
    kernel_meta["sigma"] = affinity.sigma;
    auto kernel_out = open_out(dir / "kernel.json");
    kernel_out << kernel_meta.dump(2) << "\n";
    kernel_out.close();

    const std::int64_t k = config.k > 0 ? config.k : eigengap_k(affinity, config.k_max);
    const ClusterResult result = cluster_trajectories(affinity, k, config.seed);

    auto labels_csv = open_out(dir / "labels.csv");
    labels_csv << "row,track_id,label\n";
    for (std::int64_t i = 0; i < corpus.m(); ++i)
        labels_csv << i << ',' << corpus.track_ids[static_cast<std::size_t>(i)] << ','
                   << result.labels[static_cast<std::size_t>(i)] << '\n';
    labels_csv.close();

    const Embedding embedding = spectral_embed(affinity, k);
    Json summary;
    summary["k"] = k;
    summary["k_mode"] = config.k > 0 ? "fixed" : "auto";
    summary["m"] = corpus.m();
    summary["beta"] = affinity.beta;
    summary["sigma"] = affinity.sigma;
    summary["inertia"] = result.inertia;
    summary["seed"] = config.seed;
    Json eig_head = Json::array();
    for (std::int64_t i = 0; i < std::min<std::int64_t>(10, embedding.eigenvalues.size()); ++i)
        eig_head.push_back(embedding.eigenvalues(i));
    summary["eigenvalues_head"] = std::move(eig_head);
    auto summary_out = open_out(dir / "summary.json");
    summary_out << summary.dump(2) << "\n";
    summary_out.close();

    Json plot = Json::array();
    for (std::int64_t i = 0; i < corpus.m(); ++i) {
        Json entry;
        entry["id"] = corpus.track_ids[static_cast<std::size_t>(i)];
        entry["label"] = result.labels[static_cast<std::size_t>(i)];
        Json path = Json::array();
        for (std::int64_t t = 0; t < corpus.length(); ++t)
            path.push_back({t, corpus.X(i, t), corpus.Y(i, t), corpus.Z(i, t)});
        entry["path"] = std::move(path);
        plot.push_back(std::move(entry));
    }
    auto plot_out = open_out(dir / "plot_export.json");
    plot_out << plot.dump(2) << "\n";
    plot_out.close();

    write_manifest(config, "cluster", timer.seconds());
}

void run_pipeline(const PipelineConfig& config) {
    config.validate();
    if (config.input_path.empty()) run_synth(config);
    run_track(config);
    run_featurize(config);
    run_cluster(config);
}

}  // namespace mtk
