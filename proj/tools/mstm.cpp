// mstm: generate shock-field datasets with the mini hydro solver, train the
// CNN-LSTM surrogate, roll it out autoregressively, and evaluate the results.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mstm/core/thread_pool.hpp"
#include "mstm/field/container.hpp"
#include "mstm/field/split.hpp"
#include "mstm/hydro/solver.hpp"
#include "mstm/metrics/report_io.hpp"
#include "mstm/nn/checkpoint.hpp"
#include "mstm/train/rollout.hpp"
#include "mstm/train/trainer.hpp"
#include "mstm/util/config_file.hpp"
#include "mstm/util/manifest.hpp"
#include "mstm/util/plot.hpp"

namespace fs = std::filesystem;
using namespace mstm;

namespace {

/// Relative output paths land under MSTM_OUT_ROOT when it is set.
fs::path resolve_out(const fs::path& path) {
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("MSTM_OUT_ROOT")) return fs::path(root) / path;
    return path;
}

struct RangeParam {
    double lo, hi;

    static RangeParam from_config(const ConfigFile& cfg, const std::string& key, double def_lo,
                                  double def_hi) {
        if (cfg.has(key)) {
            const double v = cfg.get_double(key, 0.0);
            return {v, v};
        }
        return {cfg.get_double(key + "_min", def_lo), cfg.get_double(key + "_max", def_hi)};
    }

    double sample(Rng& rng) const { return lo == hi ? lo : rng.uniform(lo, hi); }
};

struct GeometrySampler {
    hydro::GeometryConfig base;
    RangeParam porosity, thickness, diameter, angle, flier_speed;

    static GeometrySampler from_config(const ConfigFile& cfg) {
        GeometrySampler s;
        const std::string kind = cfg.get_string("kind", "");
        if (kind == "porous")
            s.base.kind = hydro::GeometryKind::porous;
        else if (kind == "lattice")
            s.base.kind = hydro::GeometryKind::lattice;
        else
            throw std::invalid_argument("config must set kind = porous | lattice");

        const bool porous = s.base.kind == hydro::GeometryKind::porous;
        s.porosity = RangeParam::from_config(cfg, "porosity", porous ? 0.05 : 0.10,
                                             porous ? 0.75 : 0.90);
        s.thickness = RangeParam::from_config(cfg, "thickness", 0.2, 1.0);
        s.diameter = RangeParam::from_config(cfg, "diameter", 0.05, 3.8);
        s.angle = RangeParam::from_config(cfg, "angle", 0.0, 45.0);
        s.flier_speed = porous ? RangeParam::from_config(cfg, "flier_speed", 0.23, 0.23)
                               : RangeParam::from_config(cfg, "flier_speed", 0.1, 0.4);

        s.base.pitch = cfg.get_double("pitch", s.base.pitch);
        s.base.lattice_thickness = cfg.get_double("lattice_thickness", s.base.lattice_thickness);
        s.base.flier_thickness = cfg.get_double("flier_thickness", s.base.flier_thickness);
        s.base.backer_thickness = cfg.get_double("backer_thickness", s.base.backer_thickness);
        s.base.rho_solid = cfg.get_double("rho_solid", s.base.rho_solid);
        s.base.gamma = cfg.get_double("gamma", s.base.gamma);
        s.base.cv = cfg.get_double("cv", s.base.cv);
        s.base.ambient_density_ratio =
            cfg.get_double("ambient_density_ratio", s.base.ambient_density_ratio);
        s.base.ambient_pressure = cfg.get_double("ambient_pressure", s.base.ambient_pressure);
        s.base.grid_n = static_cast<std::size_t>(cfg.get_u64("grid_n", s.base.grid_n));
        s.base.output_n = static_cast<std::size_t>(cfg.get_u64("output_n", s.base.output_n));
        s.base.frames = static_cast<std::size_t>(cfg.get_u64("frames", 0));
        s.base.cfl = cfg.get_double("cfl", s.base.cfl);
        s.base.t_end = cfg.get_double("t_end", 0.0);
        cfg.reject_unknown_keys();
        return s;
    }

    hydro::GeometryConfig sample(std::uint64_t seed, std::size_t index) const {
        Rng rng = Rng::forked(seed, index);
        hydro::GeometryConfig cfg = base;
        cfg.porosity = porosity.sample(rng);
        cfg.flier_speed = flier_speed.sample(rng);
        if (cfg.kind == hydro::GeometryKind::porous) {
            cfg.thickness = thickness.sample(rng);
            cfg.diameter = diameter.sample(rng);
        } else {
            cfg.angle_deg = angle.sample(rng);
        }
        cfg.rng_seed = rng.next_u64();
        return cfg;
    }
};

int cmd_generate(const std::string& config_path, const std::string& out_arg,
                 std::size_t n_sequences, std::uint64_t seed, std::size_t threads) {
    const fs::path out_path = resolve_out(out_arg);
    const ConfigFile cfg = ConfigFile::parse_file(config_path);
    const GeometrySampler sampler = GeometrySampler::from_config(cfg);

    std::vector<Sequence> sequences(n_sequences);
    std::vector<std::string> failures(n_sequences);
    ThreadPool pool(threads);
    pool.parallel_for(n_sequences, [&](std::size_t i) {
        try {
            hydro::GeometryConfig g = sampler.sample(seed, i);
            Sequence seq = hydro::run_simulation(g);
            seq.params["seq_id"] = static_cast<double>(i);
            sequences[i] = std::move(seq);
        } catch (const std::exception& e) {
            failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < n_sequences; ++i) {
        if (!failures[i].empty()) {
            std::cerr << "mstm generate: sequence " << i << " failed: " << failures[i] << "\n";
            std::cerr << "mstm generate: refusing to write a partial container\n";
            return 3;
        }
    }

    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    write_container(out_path, sequences);
    read_container(out_path);  // validate what we wrote

    RunManifest manifest;
    manifest.command = "generate";
    manifest.config_hash = file_fingerprint(config_path);
    manifest.dataset_hash = file_fingerprint(out_path);
    manifest.seed = seed;
    manifest.write(out_path.string() + ".manifest");
    std::cerr << "mstm generate: wrote " << n_sequences << " sequences to " << out_path << "\n";
    return 0;
}

struct TrainFileConfig {
    train::TrainConfig tcfg;
    std::size_t conv1 = 64, conv2 = 128, hidden = 512, layers = 4;
};

TrainFileConfig load_train_config(const std::string& path, std::uint64_t seed_override,
                                  bool has_seed_override) {
    TrainFileConfig out;
    const ConfigFile cfg = ConfigFile::parse_file(path);
    out.tcfg = train::TrainConfig::preset(cfg.get_string("preset", "desk"));
    out.tcfg.epochs = static_cast<std::size_t>(cfg.get_u64("epochs", out.tcfg.epochs));
    out.tcfg.batch_size = static_cast<std::size_t>(cfg.get_u64("batch_size", out.tcfg.batch_size));
    out.tcfg.lr = cfg.get_double("lr", out.tcfg.lr);
    out.tcfg.window = static_cast<std::size_t>(cfg.get_u64("window", out.tcfg.window));
    out.tcfg.seed = cfg.get_u64("seed", out.tcfg.seed);
    out.tcfg.checkpoint_interval =
        static_cast<std::size_t>(cfg.get_u64("checkpoint_interval", 0));
    out.tcfg.patience = static_cast<std::size_t>(cfg.get_u64("patience", 0));
    out.conv1 = static_cast<std::size_t>(cfg.get_u64("conv1_out", out.conv1));
    out.conv2 = static_cast<std::size_t>(cfg.get_u64("conv2_out", out.conv2));
    out.hidden = static_cast<std::size_t>(cfg.get_u64("lstm_hidden", out.hidden));
    out.layers = static_cast<std::size_t>(cfg.get_u64("lstm_layers", out.layers));
    cfg.reject_unknown_keys();
    if (has_seed_override) out.tcfg.seed = seed_override;
    return out;
}

void write_train_csv(const fs::path& path, const train::TrainReport& report,
                     std::uint64_t first_epoch) {
    const bool real_timing = std::getenv("MSTM_TIMING_CSV") != nullptr;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "epoch,train_loss,val_loss,seconds\n";
    for (std::size_t i = 0; i < report.train_loss.size(); ++i) {
        os << (first_epoch + i) << ',' << metrics::report_detail::fmt(report.train_loss[i])
           << ',' << metrics::report_detail::fmt(report.val_loss[i]) << ','
           << metrics::report_detail::fmt(real_timing ? report.seconds[i] : 0.0) << '\n';
    }
}

int cmd_train(const std::string& data_path, const std::string& config_path,
              const std::string& out_arg, const std::string& resume_path,
              std::uint64_t seed_override, bool has_seed_override, std::size_t threads) {
    const fs::path out_ckpt = resolve_out(out_arg);
    TrainFileConfig file_cfg = load_train_config(config_path, seed_override, has_seed_override);
    const auto sequences = read_container(data_path);
    if (sequences.size() < 3) {
        std::cerr << "mstm train: dataset needs at least 3 sequences\n";
        return 2;
    }

    const auto& shape = sequences.front().frames.front();
    nn::ModelConfig mcfg;
    mcfg.fields = shape.fields();
    mcfg.height = shape.height();
    mcfg.width = shape.width();
    mcfg.window = file_cfg.tcfg.window;
    mcfg.conv1_out = file_cfg.conv1;
    mcfg.conv2_out = file_cfg.conv2;
    mcfg.lstm_hidden = file_cfg.hidden;
    mcfg.lstm_layers = file_cfg.layers;

    const DatasetSplit split = split_dataset(sequences.size(), file_cfg.tcfg.seed);

    std::optional<train::TrainStart> start;
    std::uint64_t first_epoch = 0;
    if (!resume_path.empty()) {
        nn::Checkpoint ck = nn::load_checkpoint(resume_path);
        first_epoch = ck.epoch;
        if (file_cfg.tcfg.epochs <= ck.epoch) {
            std::cerr << "mstm train: checkpoint already at epoch " << ck.epoch << "\n";
            return 2;
        }
        file_cfg.tcfg.epochs -= ck.epoch;
        start = train::TrainStart{std::move(ck.params), std::move(ck.adam), ck.epoch};
    }

    if (out_ckpt.has_parent_path()) fs::create_directories(out_ckpt.parent_path());
    const fs::path stats_path = out_ckpt.string() + ".stats";
    const fs::path csv_path = out_ckpt.string() + ".csv";

    // stats are a pure function of (dataset, split); write the sidecar up
    // front so intermediate checkpoints already carry the right hash
    {
        std::vector<Sequence> train_seqs;
        for (std::size_t i : split.train) train_seqs.push_back(sequences.at(i));
        write_norm_stats(stats_path, compute_norm_stats(train_seqs));
    }
    const std::uint32_t stats_crc = file_crc32(stats_path);

    ThreadPool pool(threads);
    try {
        train::TrainResult result = train::train(
            sequences, split, mcfg, file_cfg.tcfg, &pool,
            [&](std::uint64_t epoch, const nn::ModelParams<float>& params,
                const nn::AdamState<float>& adam, const train::TrainReport& report) {
                save_checkpoint(out_ckpt.string() + ".epoch" + std::to_string(epoch), params,
                                &adam, epoch, stats_crc);
                write_train_csv(csv_path, report, first_epoch);
            },
            [&](std::uint64_t epoch, double train_loss, double val_loss) {
                std::cerr << "epoch " << epoch << " train " << train_loss << " val " << val_loss
                          << "\n";
            },
            std::move(start));

        save_checkpoint(out_ckpt, result.params, &result.adam, result.report.final_epoch,
                        stats_crc);
        write_train_csv(csv_path, result.report, first_epoch);

        RunManifest manifest;
        manifest.command = "train";
        manifest.config_hash = file_fingerprint(config_path);
        manifest.dataset_hash = file_fingerprint(data_path);
        manifest.checkpoint_id = file_fingerprint(out_ckpt);
        manifest.seed = file_cfg.tcfg.seed;
        manifest.write(out_ckpt.string() + ".manifest");
    } catch (const std::exception& e) {
        std::cerr << "mstm train: aborted: " << e.what() << "\n";
        std::cerr << "mstm train: last written checkpoint (if any) is retained\n";
        return 3;
    }
    return 0;
}

int cmd_rollout(const std::string& ckpt_path, const std::string& data_path,
                const std::string& out_arg, std::uint64_t seed, std::size_t threads) {
    const fs::path out_dir = resolve_out(out_arg);
    nn::Checkpoint ck = nn::load_checkpoint(ckpt_path);
    const fs::path stats_path = ckpt_path + ".stats";
    if (!fs::exists(stats_path)) {
        std::cerr << "mstm rollout: missing norm-stats sidecar " << stats_path << "\n";
        return 2;
    }
    if (file_crc32(stats_path) != ck.norm_stats_crc) {
        std::cerr << "mstm rollout: norm-stats sidecar does not match the checkpoint hash\n";
        return 2;
    }
    const NormStats stats = read_norm_stats(stats_path);

    const auto sequences = read_container(data_path);
    const DatasetSplit split = split_dataset(sequences.size(), seed);

    // the stats the checkpoint was trained with must match this dataset+seed
    std::vector<Sequence> train_seqs;
    for (std::size_t i : split.train) train_seqs.push_back(sequences.at(i));
    const NormStats derived = compute_norm_stats(train_seqs);
    {
        const fs::path probe = out_dir / ".stats_probe";
        fs::create_directories(out_dir);
        write_norm_stats(probe, derived);
        const bool match = file_crc32(probe) == ck.norm_stats_crc;
        fs::remove(probe);
        if (!match) {
            std::cerr << "mstm rollout: dataset/seed stats do not match the checkpoint's "
                         "normalization stats; refusing to roll out\n";
            return 2;
        }
    }

    std::vector<Sequence> test_seqs;
    for (std::size_t i : split.test) test_seqs.push_back(sequences.at(i));

    nn::Model<float> model(std::move(ck.params));
    ThreadPool pool(threads);
    const auto pairs = train::evaluate_rollouts(model, test_seqs, stats, &pool);

    std::vector<Sequence> truth, pred;
    for (const auto& pair : pairs) {
        truth.push_back(pair.truth);
        pred.push_back(pair.prediction);
        if (pair.truncated)
            std::cerr << "mstm rollout: warning: a rollout truncated on non-finite output\n";
    }
    write_container(out_dir / "truth.mstm", truth);
    write_container(out_dir / "pred.mstm", pred);
    fs::copy_file(stats_path, out_dir / "pred.mstm.stats",
                  fs::copy_options::overwrite_existing);

    RunManifest manifest;
    manifest.command = "rollout";
    manifest.dataset_hash = file_fingerprint(data_path);
    manifest.checkpoint_id = file_fingerprint(ckpt_path);
    manifest.seed = seed;
    manifest.write((out_dir / "rollout.manifest").string());
    std::cerr << "mstm rollout: wrote " << pairs.size() << " paired sequences to " << out_dir
              << "\n";
    return 0;
}

int cmd_evaluate(const std::string& pred_path, const std::string& truth_path,
                 const std::string& bounds_preset, const std::string& out_arg,
                 const std::string& stats_arg) {
    const fs::path out_dir = resolve_out(out_arg);
    const fs::path stats_path = stats_arg.empty() ? fs::path(pred_path + ".stats")
                                                  : fs::path(stats_arg);
    if (!fs::exists(stats_path)) {
        std::cerr << "mstm evaluate: norm stats not found at " << stats_path << "\n";
        return 2;
    }
    const NormStats stats = read_norm_stats(stats_path);
    const auto truth = read_container(truth_path);
    const auto pred = read_container(pred_path);
    const metrics::MaterialBounds bounds = metrics::MaterialBounds::preset(bounds_preset);

    const auto report = metrics::evaluate_pairs(truth, pred, stats, bounds);
    metrics::write_report(out_dir, report);

    RunManifest manifest;
    manifest.command = "evaluate";
    manifest.dataset_hash = file_fingerprint(truth_path);
    manifest.write((out_dir / "evaluate.manifest").string());
    std::cerr << "mstm evaluate: wrote metrics for " << truth.size() << " sequences to "
              << out_dir << "\n";
    return 0;
}

int cmd_report(const std::string& metrics_arg, const std::string& out_arg) {
    const fs::path metrics_dir = metrics_arg;
    const fs::path out_dir = resolve_out(out_arg);
    const fs::path curves_path = metrics_dir / "metrics_curves.csv";
    std::ifstream is(curves_path);
    if (!is) {
        std::cerr << "mstm report: missing " << curves_path << "\n";
        return 2;
    }
    std::map<std::string, PlotSeries> series;
    std::string line;
    std::getline(is, line);  // header
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string metric, t, mean, sd, count;
        std::getline(row, metric, ',');
        std::getline(row, t, ',');
        std::getline(row, mean, ',');
        std::getline(row, sd, ',');
        std::getline(row, count, ',');
        PlotSeries& s = series[metric];
        s.x.push_back(std::stod(t));
        s.mean.push_back(std::stod(mean));
        s.stddev.push_back(std::stod(sd));
    }
    if (series.empty()) {
        std::cerr << "mstm report: no rows in " << curves_path << "\n";
        return 2;
    }
    fs::create_directories(out_dir);
    for (const auto& [name, data] : series) {
        const Canvas canvas = plot_series(data);
        canvas.write_png(out_dir / (name + ".png"));
    }
    fs::copy_file(curves_path, out_dir / "metrics_curves.csv",
                  fs::copy_options::overwrite_existing);

    RunManifest manifest;
    manifest.command = "report";
    manifest.dataset_hash = file_fingerprint(curves_path);
    manifest.write((out_dir / "report.manifest").string());
    std::cerr << "mstm report: rendered " << series.size() << " plots to " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"shock-field surrogate toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string config;
    app.add_option("--seed", seed, "global rng seed");
    app.add_option("--threads", threads, "worker threads (results are thread-count invariant)");
    app.add_option("--config", config, "configuration file");

    auto* gen = app.add_subcommand("generate", "simulate sequences into an MSTM container");
    gen->fallthrough();
    std::string gen_out = "dataset.mstm";
    std::size_t gen_n = 10;
    gen->add_option("--out", gen_out, "output container path");
    gen->add_option("--n", gen_n, "number of sequences");

    auto* tr = app.add_subcommand("train", "teacher-forced training");
    tr->fallthrough();
    std::string tr_data, tr_out = "model.mstw", tr_resume;
    tr->add_option("--data", tr_data, "dataset container")->required();
    tr->add_option("--out", tr_out, "output checkpoint path");
    tr->add_option("--resume", tr_resume, "checkpoint to continue from");

    auto* ro = app.add_subcommand("rollout", "autoregressive rollout on the test split");
    ro->fallthrough();
    std::string ro_ckpt, ro_data, ro_out = "rollout";
    ro->add_option("--checkpoint", ro_ckpt, "trained checkpoint")->required();
    ro->add_option("--data", ro_data, "dataset container")->required();
    ro->add_option("--out", ro_out, "output directory");

    auto* ev = app.add_subcommand("evaluate", "metric suite on paired containers");
    ev->fallthrough();
    std::string ev_pred, ev_truth, ev_bounds = "solid", ev_out = "metrics", ev_stats;
    ev->add_option("--pred", ev_pred, "prediction container")->required();
    ev->add_option("--truth", ev_truth, "ground-truth container")->required();
    ev->add_option("--bounds", ev_bounds, "material bounds preset: porous|lattice|solid");
    ev->add_option("--out", ev_out, "output directory");
    ev->add_option("--stats", ev_stats, "norm stats sidecar (default: <pred>.stats)");

    auto* re = app.add_subcommand("report", "render metric curves as PNG plots");
    re->fallthrough();
    std::string re_metrics = "metrics", re_out = "report";
    re->add_option("--metrics", re_metrics, "directory with metrics_curves.csv");
    re->add_option("--out", re_out, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            if (config.empty()) {
                std::cerr << "mstm generate: --config is required\n";
                return 1;
            }
            return cmd_generate(config, gen_out, gen_n, seed, threads);
        }
        if (tr->parsed()) {
            if (config.empty()) {
                std::cerr << "mstm train: --config is required\n";
                return 1;
            }
            const bool seed_given = app.count("--seed") > 0;
            return cmd_train(tr_data, config, tr_out, tr_resume, seed, seed_given, threads);
        }
        if (ro->parsed()) return cmd_rollout(ro_ckpt, ro_data, ro_out, seed, threads);
        if (ev->parsed()) return cmd_evaluate(ev_pred, ev_truth, ev_bounds, ev_out, ev_stats);
        if (re->parsed()) return cmd_report(re_metrics, re_out);
    } catch (const ContainerError& e) {
        std::cerr << "mstm: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "mstm: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mstm: " << e.what() << "\n";
        return 3;
    }
    return 1;
}
