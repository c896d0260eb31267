#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "udf/applications.hpp"
#include "udf/config.hpp"
#include "udf/fixtures.hpp"
#include "udf/geometry.hpp"
#include "udf/mesher.hpp"
#include "udf/metrics.hpp"
#include "udf/trainer.hpp"

namespace fs = std::filesystem;
using namespace udf;

namespace {

struct CommonArgs {
    std::string out_dir = "run";
    std::string config_path;
    std::vector<std::string> overrides;  // key=value, applied after the file
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-o,--out-dir", args.out_dir, "Run directory for outputs and the manifest");
    cmd->add_option("-c,--config", args.config_path, "key=value config file");
    cmd->add_option("--set", args.overrides, "Override a config key (key=value, repeatable)");
    cmd->add_option("--threads", args.threads, "Worker thread cap");
}

config::RunConfig merged_config(const CommonArgs& args) {
    config::RunConfig cfg;
    if (!args.config_path.empty()) config::apply_config_file(cfg, args.config_path);
    for (const std::string& kv : args.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        config::apply_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    return cfg;
}

struct RunScope {
    config::RunManifest manifest;
    fs::path dir;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    RunScope(const std::string& command, const CommonArgs& args, const config::RunConfig& cfg) {
        dir = args.out_dir;
        fs::create_directories(dir);
        manifest.command = command;
        manifest.config = cfg.snapshot();
        manifest.seed = cfg.train.seed;
        manifest.tool_version = config::kToolVersion;
    }
    void input(const std::string& path) {
        char hex[32];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(config::fnv1a_file(path)));
        manifest.input_hashes[path] = hex;
    }
    std::string out(const std::string& name) {
        const std::string p = (dir / name).string();
        manifest.outputs.push_back(p);
        return p;
    }
    void finish() {
        manifest.wall_clock_sec =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        config::write_manifest((dir / "manifest.json").string(), manifest);
    }
};

TriangleMesh denormalized(TriangleMesh mesh, const Normalization& norm) {
    for (Vec3& v : mesh.vertices) v = norm.to_original(v);
    return mesh;
}

int run_fit(const CommonArgs& args, const std::string& input) {
    config::RunConfig cfg = merged_config(args);
    RunScope run("fit", args, cfg);
    run.input(input);

    const PointCloud raw = load_point_cloud(input);
    const PointCloud cloud = normalize(raw);
    const auto result = trainer::fit(cloud, cfg.train);

    CheckpointMeta meta;
    meta.iterations = static_cast<std::uint64_t>(cfg.train.iterations);
    meta.alpha1 = cfg.train.weights.alpha1;
    meta.alpha2 = cfg.train.weights.alpha2;
    meta.alpha3 = cfg.train.weights.alpha3;
    meta.lambda = cfg.train.weights.lambda;
    save_checkpoint(run.out("checkpoint.udfckpt"),
                    checkpoint_from(result.field, cloud.normalization(), meta));
    trainer::save_trace_tsv(run.out("trace.tsv"), result.trace);
    run.finish();
    return 0;
}

int run_reconstruct(const CommonArgs& args, const std::string& ckpt_path,
                    const std::string& mesh_name) {
    config::RunConfig cfg = merged_config(args);
    cfg.mesh.threads = args.threads;
    RunScope run("reconstruct", args, cfg);
    run.input(ckpt_path);

    const FieldCheckpoint ckpt = load_checkpoint(ckpt_path);
    const UdfField field = ckpt.make_field();
    TriangleMesh mesh = mesher::extract_mesh(field, cfg.mesh);
    if (mesh.empty())
        std::cerr << "warning: no surface crossed the lattice; writing an empty mesh\n";
    mesh = denormalized(std::move(mesh), ckpt.normalization);
    const std::string out = run.out(mesh_name);
    if (out.size() >= 4 && out.substr(out.size() - 4) == ".ply")
        save_mesh_ply(out, mesh);
    else
        save_mesh_obj(out, mesh);
    run.finish();
    return 0;
}

int run_normals(const CommonArgs& args, const std::string& ckpt_path,
                const std::string& cloud_path) {
    config::RunConfig cfg = merged_config(args);
    RunScope run("normals", args, cfg);
    run.input(ckpt_path);
    run.input(cloud_path);

    const FieldCheckpoint ckpt = load_checkpoint(ckpt_path);
    const UdfField field = ckpt.make_field();
    const PointCloud raw = load_point_cloud(cloud_path);
    std::vector<Vec3> scaled(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        scaled[i] = ckpt.normalization.to_normalized(raw.point(i));
    const PointCloud normalized_cloud{std::move(scaled)};
    const auto normals = applications::estimate_normals(field, normalized_cloud);
    applications::save_normals(run.out("normals.xyz"), raw, normals);
    if (normals.degenerate_count > 0)
        std::cerr << "warning: " << normals.degenerate_count
                  << " points had degenerate gradients (zero normal emitted)\n";
    run.finish();
    return 0;
}

int run_upsample(const CommonArgs& args, const std::string& ckpt_path,
                 const std::string& cloud_path) {
    config::RunConfig cfg = merged_config(args);
    RunScope run("upsample", args, cfg);
    run.input(ckpt_path);
    run.input(cloud_path);

    const FieldCheckpoint ckpt = load_checkpoint(ckpt_path);
    const UdfField field = ckpt.make_field();
    const PointCloud raw = load_point_cloud(cloud_path);
    std::vector<Vec3> scaled(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        scaled[i] = ckpt.normalization.to_normalized(raw.point(i));
    const PointCloud dense =
        applications::upsample(field, PointCloud{std::move(scaled)}, cfg.upsample, cfg.train.seed);
    std::vector<Vec3> restored(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i)
        restored[i] = ckpt.normalization.to_original(dense.point(i));
    save_point_cloud(run.out("upsampled.xyz"), PointCloud{std::move(restored)}, CloudFormat::Xyz);
    run.finish();
    return 0;
}

bool is_mesh_path(const std::string& p) {
    return (p.size() >= 4 && (p.substr(p.size() - 4) == ".obj")) ||
           (p.size() >= 4 && p.substr(p.size() - 4) == ".ply" &&
            !load_mesh(p).triangles.empty());
}

int run_eval(const CommonArgs& args, const std::string& pred_path, const std::string& gt_path,
             const std::vector<double>& thresholds) {
    config::RunConfig cfg = merged_config(args);
    RunScope run("eval", args, cfg);
    run.input(pred_path);
    run.input(gt_path);

    metrics::EvalOptions opts;
    opts.sample_count = cfg.eval_samples;
    opts.seed = cfg.train.seed;
    if (!thresholds.empty()) opts.fscore_thresholds = thresholds;

    metrics::EvalReport report;
    const bool pred_mesh = is_mesh_path(pred_path);
    const bool gt_mesh = is_mesh_path(gt_path);
    if (pred_mesh && gt_mesh) {
        report = metrics::evaluate_meshes(load_mesh(pred_path), load_mesh(gt_path), opts);
    } else {
        auto as_points = [&](const std::string& p, bool mesh) {
            if (!mesh) return load_point_cloud(p).points();
            return metrics::sample_mesh(load_mesh(p), opts.sample_count, opts.seed).points;
        };
        report = metrics::evaluate_clouds(as_points(pred_path, pred_mesh),
                                          as_points(gt_path, gt_mesh), opts);
    }
    std::cout << report.to_text();
    std::ofstream kv(run.out("report.txt"));
    kv << report.to_key_values();
    run.finish();
    return 0;
}

int run_fixtures(const CommonArgs& args, const std::string& shape, int count,
                 unsigned long long seed, double noise) {
    config::RunConfig cfg = merged_config(args);
    RunScope run("fixtures", args, cfg);
    const auto analytic = fixtures::AnalyticShape::from_name(shape);
    PointCloud cloud = analytic.sample_surface(static_cast<std::size_t>(count), seed);
    if (noise > 0.0) cloud = fixtures::add_noise(cloud, noise, seed + 1);
    save_point_cloud(run.out(shape + ".xyz"), cloud, CloudFormat::Xyz);
    run.finish();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Unsigned-distance-field toolkit: fit a field to a raw point cloud, "
                 "extract open-surface meshes, estimate normals, upsample, evaluate."};
    app.require_subcommand(1);

    CommonArgs args;
    std::string input, ckpt, cloud_path, pred, gt, shape = "sphere", mesh_name = "mesh.obj";
    int count = 10000;
    unsigned long long fixture_seed = 0;
    double noise = 0.0;
    std::vector<double> thresholds;

    auto* fit = app.add_subcommand("fit", "Train a field on a point cloud");
    fit->add_option("input", input, "Input cloud (.xyz or .ply)")->required();
    add_common(fit, args);

    auto* rec = app.add_subcommand("reconstruct", "Extract a mesh from a checkpoint");
    rec->add_option("checkpoint", ckpt)->required();
    rec->add_option("--mesh-name", mesh_name, "Output file name (.obj or .ply)");
    add_common(rec, args);

    auto* nrm = app.add_subcommand("normals", "Estimate unoriented normals at the raw points");
    nrm->add_option("checkpoint", ckpt)->required();
    nrm->add_option("cloud", cloud_path)->required();
    add_common(nrm, args);

    auto* ups = app.add_subcommand("upsample", "Densify a cloud by pulling sampled queries");
    ups->add_option("checkpoint", ckpt)->required();
    ups->add_option("cloud", cloud_path)->required();
    add_common(ups, args);

    auto* ev = app.add_subcommand("eval", "Compare a prediction against ground truth");
    ev->add_option("pred", pred)->required();
    ev->add_option("gt", gt)->required();
    ev->add_option("--fscore-tau", thresholds, "F-score distance thresholds");
    add_common(ev, args);

    auto* fx = app.add_subcommand("fixtures", "Generate an analytic test shape cloud");
    fx->add_option("--shape", shape, "plane, sphere, half_sphere, two_planes, torus");
    fx->add_option("--count", count);
    fx->add_option("--seed", fixture_seed);
    fx->add_option("--noise", noise, "Gaussian sigma added to the samples");
    add_common(fx, args);

    try {
        app.parse(argc, argv);
        if (fit->parsed()) return run_fit(args, input);
        if (rec->parsed()) return run_reconstruct(args, ckpt, mesh_name);
        if (nrm->parsed()) return run_normals(args, ckpt, cloud_path);
        if (ups->parsed()) return run_upsample(args, ckpt, cloud_path);
        if (ev->parsed()) return run_eval(args, pred, gt, thresholds);
        if (fx->parsed()) return run_fixtures(args, shape, count, fixture_seed, noise);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 2;
    } catch (const DegenerateInputError& e) {
        std::cerr << "degenerate input: " << e.what() << "\n";
        return 5;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
