#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gausskin/errors.hpp"
#include "gausskin/fixture.hpp"
#include "gausskin/gaussian_cloud.hpp"
#include "gausskin/image_io.hpp"
#include "gausskin/metrics.hpp"
#include "gausskin/parallel.hpp"
#include "gausskin/raster.hpp"
#include "gausskin/sh.hpp"
#include "gausskin/skinning.hpp"
#include "gausskin/validate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gausskin;

namespace {

struct AssetFlags {
    std::string cloud, rig, weights, clip, cam;
};

struct LoadedAssets {
    GaussianCloud cloud;
    Skeleton skeleton;
    SkinWeights weights;
    AnimationClip clip;
    Camera camera;
};

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string("missing required --") + what + " path");
    if (!fs::exists(path)) throw IoError(path + ": file does not exist");
}

LoadedAssets load_assets(const AssetFlags& flags, bool need_camera) {
    require_file(flags.cloud, "cloud");
    require_file(flags.rig, "rig");
    require_file(flags.weights, "weights");
    require_file(flags.clip, "clip");
    if (need_camera) require_file(flags.cam, "cam");

    LoadedAssets a;
    a.cloud = ply_read(flags.cloud);
    a.skeleton = load_rig(flags.rig);
    a.weights = load_weights(flags.weights);
    a.clip = load_clip(flags.clip);
    if (need_camera) a.camera = load_camera(flags.cam);

    if (a.weights.size() != a.cloud.size())
        throw DataError(flags.weights + " covers " + std::to_string(a.weights.size()) +
                        " gaussians but " + flags.cloud + " holds " + std::to_string(a.cloud.size()));
    if (a.weights.joint_count != a.skeleton.joint_count())
        throw DataError(flags.weights + " references " + std::to_string(a.weights.joint_count) +
                        " joints but " + flags.rig + " defines " +
                        std::to_string(a.skeleton.joint_count()));
    if (a.clip.joint_count != a.skeleton.joint_count())
        throw DataError(flags.clip + " animates " + std::to_string(a.clip.joint_count) +
                        " joints but " + flags.rig + " defines " +
                        std::to_string(a.skeleton.joint_count()));
    return a;
}

const Pose& clip_frame(const AnimationClip& clip, int frame) {
    if (frame < 0 || frame >= static_cast<int>(clip.frames.size()))
        throw UsageError("--frame " + std::to_string(frame) + " out of range (clip has " +
                         std::to_string(clip.frames.size()) + " frames)");
    return clip.frames[frame];
}

Camera with_resolution(Camera cam, const std::string& resolution) {
    if (resolution.empty()) return cam;
    const auto x = resolution.find('x');
    int w = 0, h = 0;
    if (x != std::string::npos) {
        w = std::atoi(resolution.substr(0, x).c_str());
        h = std::atoi(resolution.substr(x + 1).c_str());
    }
    if (w < 1 || h < 1) throw UsageError("--resolution must look like 512x512");
    cam.fx *= double(w) / cam.width;
    cam.cx *= double(w) / cam.width;
    cam.fy *= double(h) / cam.height;
    cam.cy *= double(h) / cam.height;
    cam.width = w;
    cam.height = h;
    return cam;
}

json psnr_to_json(double v) {
    if (std::isinf(v)) return "inf";
    return v;
}

std::string frame_name(const char* prefix, int frame) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%04d.png", prefix, frame);
    return buf;
}

void write_json_report(const json& report, const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot open file for writing");
    out << report.dump(2) << '\n';
    if (!out) throw IoError(path.string() + ": write failed");
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

int cmd_generate_fixture(const std::string& out_dir, int bones, int per_ring, int rings,
                         int frames, double fps, int width, int height, std::uint64_t seed) {
    const TestFixture fx = make_test_rig(bones, per_ring, rings, seed);
    const AnimationClip clip = make_test_clip(fx.skeleton, frames, fps, seed);
    const Camera cam = make_fixture_camera(fx.skeleton, width, height);

    fs::create_directories(out_dir);
    const fs::path dir(out_dir);
    ply_write(fx.cloud, (dir / "cloud.ply").string());
    save_rig(fx.skeleton, (dir / "rig.json").string());
    save_weights(fx.weights, (dir / "weights.json").string());
    save_clip(clip, (dir / "clip.json").string());
    save_camera(cam, (dir / "cam.json").string());

    std::printf("fixture: %zu gaussians, %d joints, %d frames, seed %" PRIu64 " -> %s\n",
                fx.cloud.size(), bones, frames, seed, out_dir.c_str());
    return 0;
}

int cmd_skin(const AssetFlags& flags, int frame, SkinningMode mode, const SolverConfig& solver,
             int workers, const std::string& out_path) {
    const LoadedAssets a = load_assets(flags, false);
    const Pose& pose = clip_frame(a.clip, frame);
    const PosedCloud posed = skin_cloud(a.cloud, a.weights, a.skeleton, pose, mode, solver, workers);
    if (!out_path.empty() && fs::path(out_path).has_parent_path())
        fs::create_directories(fs::path(out_path).parent_path());
    ply_write(posed_to_cloud(posed), out_path);
    std::printf("skinned frame %d (%s) -> %s (mean |det-1| = %.6f)\n", frame, to_string(mode),
                out_path.c_str(), posed.mean_abs_det_minus_one);
    return 0;
}

int cmd_render(const AssetFlags& flags, int frame, SkinningMode mode, const SolverConfig& solver,
               int workers, const std::string& resolution, const std::string& out_path,
               const std::string& mask_path) {
    const LoadedAssets a = load_assets(flags, true);
    const Camera cam = with_resolution(a.camera, resolution);
    const Pose& pose = clip_frame(a.clip, frame);
    const PosedCloud posed = skin_cloud(a.cloud, a.weights, a.skeleton, pose, mode, solver, workers);
    const FrameBuffer fb = render(posed, cam, workers);
    if (!out_path.empty() && fs::path(out_path).has_parent_path())
        fs::create_directories(fs::path(out_path).parent_path());
    write_png(fb, out_path);
    if (!mask_path.empty()) write_mask_png(fb, mask_path);
    std::printf("rendered frame %d (%s, %dx%d) -> %s\n", frame, to_string(mode), cam.width,
                cam.height, out_path.c_str());
    return 0;
}

int cmd_animate(const AssetFlags& flags, SkinningMode mode, const SolverConfig& solver, int workers,
                const std::string& resolution, const std::string& out_dir, bool write_masks) {
    const LoadedAssets a = load_assets(flags, true);
    const Camera cam = with_resolution(a.camera, resolution);
    fs::create_directories(out_dir);
    for (int f = 0; f < static_cast<int>(a.clip.frames.size()); ++f) {
        const PosedCloud posed =
            skin_cloud(a.cloud, a.weights, a.skeleton, a.clip.frames[f], mode, solver, workers);
        const FrameBuffer fb = render(posed, cam, workers);
        write_png(fb, (fs::path(out_dir) / frame_name("frame", f)).string());
        if (write_masks) write_mask_png(fb, (fs::path(out_dir) / frame_name("mask", f)).string());
    }
    std::printf("rendered %zu frame(s) (%s, %dx%d) -> %s\n", a.clip.frames.size(), to_string(mode),
                cam.width, cam.height, out_dir.c_str());
    return 0;
}

int cmd_compare(const AssetFlags& flags, const std::vector<std::string>& mode_names,
                const SolverConfig& solver, int workers, const std::string& resolution,
                const std::string& out_dir) {
    if (mode_names.size() < 2) throw UsageError("--modes needs at least two entries");
    std::vector<SkinningMode> modes;
    for (const std::string& name : mode_names) modes.push_back(skinning_mode_from_string(name));

    const LoadedAssets a = load_assets(flags, true);
    const Camera cam = with_resolution(a.camera, resolution);
    const int frames = static_cast<int>(a.clip.frames.size());

    // Render every mode over the clip; the det deviation depends only on the
    // pose and weights, so one mode's measurement covers all.
    std::vector<std::vector<FrameBuffer>> renders(modes.size());
    std::vector<double> det_deviation(frames, 0.0);
    for (std::size_t m = 0; m < modes.size(); ++m) {
        for (int f = 0; f < frames; ++f) {
            const PosedCloud posed = skin_cloud(a.cloud, a.weights, a.skeleton, a.clip.frames[f],
                                                modes[m], solver, workers);
            if (m == 0) det_deviation[f] = posed.mean_abs_det_minus_one;
            renders[m].push_back(render(posed, cam, workers));
        }
    }

    json pairs = json::array();
    std::printf("%-32s %10s %10s\n", "pair (aggregate over clip)", "PSNR(dB)", "SSIM");
    for (std::size_t i = 0; i < modes.size(); ++i) {
        for (std::size_t j = i + 1; j < modes.size(); ++j) {
            json frame_rows = json::array();
            double psnr_sum = 0.0, ssim_sum = 0.0;
            int finite = 0, identical = 0;
            for (int f = 0; f < frames; ++f) {
                const MetricReport r = compare_images(renders[i][f], renders[j][f]);
                frame_rows.push_back(
                    {{"frame", f}, {"psnr", psnr_to_json(r.psnr)}, {"ssim", r.ssim}});
                if (std::isinf(r.psnr)) {
                    ++identical;
                } else {
                    psnr_sum += r.psnr;
                    ++finite;
                }
                ssim_sum += r.ssim;
            }
            const std::string label =
                std::string(to_string(modes[i])) + " vs " + to_string(modes[j]);
            json aggregate = {{"ssim_mean", ssim_sum / frames}, {"identical_frames", identical}};
            aggregate["psnr_mean"] = finite ? json(psnr_sum / finite) : json("inf");
            pairs.push_back({{"a", to_string(modes[i])},
                             {"b", to_string(modes[j])},
                             {"frames", frame_rows},
                             {"aggregate", aggregate}});
            if (finite)
                std::printf("%-32s %10.3f %10.5f\n", label.c_str(), psnr_sum / finite,
                            ssim_sum / frames);
            else
                std::printf("%-32s %10s %10.5f\n", label.c_str(), "inf", ssim_sum / frames);
        }
    }

    double det_mean = 0.0;
    for (double d : det_deviation) det_mean += d;
    det_mean = frames ? det_mean / frames : 0.0;
    std::printf("mean |det-1| of unorthonormalized blends: %.6f\n", det_mean);

    const json report = {{"version", "gausskin-report/1"},
                         {"kind", "compare"},
                         {"modes", mode_names},
                         {"solver", solver.kind == SolverConfig::Kind::kExact
                                        ? "exact"
                                        : "power(" + std::to_string(solver.iterations) + ")"},
                         {"workers", workers > 0 ? workers : default_worker_count()},
                         {"frames", frames},
                         {"det_deviation_per_frame", det_deviation},
                         {"det_deviation_mean", det_mean},
                         {"pairs", pairs}};
    write_json_report(report, fs::path(out_dir) / "report.json");
    return 0;
}

int cmd_validate(std::uint64_t seed, int workers, bool corrupt_wigner) {
    if (corrupt_wigner) set_wigner_test_corruption(true);
    const std::vector<SuiteResult> results = run_validation_suites(seed, workers);
    set_wigner_test_corruption(false);

    bool all_passed = true;
    for (const SuiteResult& r : results) {
        std::printf("[%s] %-28s max err %.3e (tol %.1e)  %s\n", r.passed ? "PASS" : "FAIL",
                    r.name.c_str(), r.max_error, r.tolerance, r.detail.c_str());
        all_passed = all_passed && r.passed;
    }
    return all_passed ? 0 : 1;
}

int cmd_bench(const AssetFlags& flags, const std::string& resolution, int workers, int reps,
              const std::string& out_dir, std::uint64_t seed) {
    const LoadedAssets a = load_assets(flags, !flags.cam.empty());
    if (a.clip.frames.empty()) throw UsageError("bench needs a clip with at least one frame");
    if (reps < 5) throw UsageError("--reps must be at least 5");
    const int effective_workers = workers > 0 ? workers : default_worker_count();
    // The middle frame: clips generated here start at the rest pose, which
    // would flatter any solver that short-circuits on identity transforms.
    const Pose& pose = a.clip.frames[a.clip.frames.size() / 2];

    struct Config {
        SkinningMode mode;
        SolverConfig solver;
        const char* label;
    };
    const Config configs[] = {
        {SkinningMode::kQuatAverage, SolverConfig::power(15), "quat-avg/power(15)"},
        {SkinningMode::kQuatAverage, SolverConfig::exact(), "quat-avg/exact"},
        {SkinningMode::kQuatAverageNoSh, SolverConfig::power(15), "quat-avg-nosh/power(15)"},
        {SkinningMode::kLbsRotation, SolverConfig::exact(), "lbs/-"},
        {SkinningMode::kPositionOnly, SolverConfig::exact(), "position-only/-"},
    };

    json skinning_rows = json::array();
    std::printf("bench: %zu gaussians, %d workers, %d reps (median)\n", a.cloud.size(),
                effective_workers, reps);
    for (const Config& cfg : configs) {
        skin_cloud(a.cloud, a.weights, a.skeleton, pose, cfg.mode, cfg.solver, workers); // warm-up
        std::vector<double> ms;
        for (int r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const PosedCloud posed =
                skin_cloud(a.cloud, a.weights, a.skeleton, pose, cfg.mode, cfg.solver, workers);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            (void)posed;
        }
        const double med = median(ms);
        const double rate = a.cloud.size() / (med / 1000.0);
        std::printf("  skin %-24s %9.2f ms/frame  %12.0f gaussians/s\n", cfg.label, med, rate);
        skinning_rows.push_back(
            {{"config", cfg.label}, {"ms_per_frame", med}, {"gaussians_per_second", rate}});
    }

    json render_row;
    if (!flags.cam.empty()) {
        const Camera cam = with_resolution(a.camera, resolution);
        const PosedCloud posed = skin_cloud(a.cloud, a.weights, a.skeleton, pose,
                                            SkinningMode::kQuatAverage, SolverConfig::power(15),
                                            workers);
        render(posed, cam, workers); // warm-up
        std::vector<double> ms;
        for (int r = 0; r < reps; ++r) {
            const auto t0 = std::chrono::steady_clock::now();
            const FrameBuffer fb = render(posed, cam, workers);
            const auto t1 = std::chrono::steady_clock::now();
            ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
            (void)fb;
        }
        const double med = median(ms);
        std::printf("  render %dx%d              %9.2f ms/frame  %8.1f fps\n", cam.width,
                    cam.height, med, 1000.0 / med);
        render_row = {{"width", cam.width},
                      {"height", cam.height},
                      {"ms_per_frame", med},
                      {"fps", 1000.0 / med}};
    }

    if (!out_dir.empty()) {
        json report = {{"version", "gausskin-report/1"},
                       {"kind", "bench"},
                       {"seed", seed},
                       {"gaussians", a.cloud.size()},
                       {"workers", effective_workers},
                       {"repetitions", reps},
                       {"skinning", skinning_rows}};
        if (!render_row.is_null()) report["render"] = render_row;
        write_json_report(report, fs::path(out_dir) / "bench.json");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gausskin: complete skinning and CPU splatting for Gaussian avatars"};
    app.require_subcommand(1);

    AssetFlags assets;
    std::string out;
    std::string mask;
    std::string resolution;
    std::string mode_name = "quat-avg";
    std::string solver_name = "power";
    std::vector<std::string> compare_modes;
    int frame = 0;
    int iters = 15;
    int workers = 0;
    int bones = 3, per_ring = 32, rings = 32, frames = 30;
    int width = 512, height = 512;
    double fps = 30.0;
    int reps = 5;
    std::uint64_t seed = 7;
    bool write_masks = false;
    bool corrupt_wigner = false;

    auto add_asset_flags = [&](CLI::App* cmd, bool with_cam) {
        cmd->add_option("--cloud", assets.cloud, "canonical cloud PLY");
        cmd->add_option("--rig", assets.rig, "skeleton JSON");
        cmd->add_option("--weights", assets.weights, "skin weights JSON");
        cmd->add_option("--clip", assets.clip, "animation clip JSON");
        if (with_cam) cmd->add_option("--cam", assets.cam, "camera JSON");
        cmd->add_option("--workers", workers, "worker threads (default: GAUSSKIN_WORKERS or cores)");
    };
    auto add_mode_flags = [&](CLI::App* cmd) {
        cmd->add_option("--mode", mode_name, "lbs | quat-avg | quat-avg-nosh | viewdir | position-only");
        cmd->add_option("--solver", solver_name, "exact | power");
        cmd->add_option("--iters", iters, "power iteration count (default 15)");
    };

    CLI::App* gen = app.add_subcommand("generate-fixture", "write a deterministic test fixture");
    gen->add_option("--out", out, "output directory")->required();
    gen->add_option("--bones", bones, "bone chain length");
    gen->add_option("--per-ring", per_ring, "gaussians per ring");
    gen->add_option("--rings", rings, "ring count");
    gen->add_option("--frames", frames, "clip frames");
    gen->add_option("--fps", fps, "clip frame rate");
    gen->add_option("--width", width, "camera width");
    gen->add_option("--height", height, "camera height");
    gen->add_option("--seed", seed, "fixture seed");

    CLI::App* skin = app.add_subcommand("skin", "deform the cloud at a clip frame, write posed PLY");
    add_asset_flags(skin, false);
    add_mode_flags(skin);
    skin->add_option("--frame", frame, "clip frame index");
    skin->add_option("--out", out, "posed PLY path")->required();

    CLI::App* rendercmd = app.add_subcommand("render", "render one clip frame to PNG");
    add_asset_flags(rendercmd, true);
    add_mode_flags(rendercmd);
    rendercmd->add_option("--frame", frame, "clip frame index");
    rendercmd->add_option("--resolution", resolution, "override, e.g. 512x512");
    rendercmd->add_option("--out", out, "output PNG path")->required();
    rendercmd->add_option("--mask", mask, "optional mask PNG path");

    CLI::App* animate = app.add_subcommand("animate", "render every clip frame to PNGs");
    add_asset_flags(animate, true);
    add_mode_flags(animate);
    animate->add_option("--resolution", resolution, "override, e.g. 512x512");
    animate->add_option("--out", out, "output directory")->required();
    animate->add_flag("--write-masks", write_masks, "also write mask PNGs");

    CLI::App* compare = app.add_subcommand("compare", "render modes over the clip and report metrics");
    add_asset_flags(compare, true);
    compare->add_option("--modes", compare_modes, "two or more modes")->required()->delimiter(',');
    compare->add_option("--solver", solver_name, "exact | power");
    compare->add_option("--iters", iters, "power iteration count");
    compare->add_option("--resolution", resolution, "override, e.g. 256x256");
    compare->add_option("--out", out, "report directory")->required();

    CLI::App* validate = app.add_subcommand("validate", "run the oracle self-check suites");
    validate->add_option("--seed", seed, "suite seed");
    validate->add_option("--workers", workers, "worker threads");
    validate->add_flag("--corrupt-wigner", corrupt_wigner)->group(""); // test hook, hidden

    CLI::App* bench = app.add_subcommand("bench", "measure skinning and render throughput");
    add_asset_flags(bench, true);
    bench->add_option("--resolution", resolution, "render resolution, e.g. 512x512");
    bench->add_option("--reps", reps, "timed repetitions (>= 5)");
    bench->add_option("--out", out, "report directory");
    bench->add_option("--seed", seed, "report seed field");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const SolverConfig solver = [&] {
            if (solver_name == "exact") return SolverConfig::exact();
            if (solver_name == "power") {
                if (iters < 1) throw UsageError("--iters must be >= 1");
                return SolverConfig::power(iters);
            }
            throw UsageError("unknown solver \"" + solver_name + "\" (expected exact | power)");
        }();

        if (gen->parsed())
            return cmd_generate_fixture(out, bones, per_ring, rings, frames, fps, width, height,
                                        seed);
        if (skin->parsed())
            return cmd_skin(assets, frame, skinning_mode_from_string(mode_name), solver, workers,
                            out);
        if (rendercmd->parsed())
            return cmd_render(assets, frame, skinning_mode_from_string(mode_name), solver, workers,
                              resolution, out, mask);
        if (animate->parsed())
            return cmd_animate(assets, skinning_mode_from_string(mode_name), solver, workers,
                               resolution, out, write_masks);
        if (compare->parsed())
            return cmd_compare(assets, compare_modes, solver, workers, resolution, out);
        if (validate->parsed()) return cmd_validate(seed, workers, corrupt_wigner);
        if (bench->parsed()) return cmd_bench(assets, resolution, workers, reps, out, seed);
        throw UsageError("no subcommand given");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
}
