// Command-line frontend for the color-enhancement library.
//
// Exit codes: 0 ok, 2 usage error, 3 I/O error, 4 numeric failure, 5 config
// error. Progress goes to stderr; data and reports go to files or stdout.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "enhance/color.hpp"
#include "enhance/config.hpp"
#include "enhance/dataset.hpp"
#include "enhance/errors.hpp"
#include "enhance/gradcheck.hpp"
#include "enhance/imageio.hpp"
#include "enhance/metrics.hpp"
#include "enhance/model_io.hpp"
#include "enhance/train_paired.hpp"
#include "enhance/train_unpaired.hpp"
#include "enhance/transform.hpp"

namespace fs = std::filesystem;
using namespace enhance;

namespace {

int g_exit = 0;

std::vector<std::pair<std::string, std::string>> read_pair_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open manifest " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw IoError("manifest line missing tab separator: " + line);
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    if (pairs.empty()) throw IoError("empty manifest " + path);
    return pairs;
}

void save_theta_for(const CoefficientMatrix& theta, const std::string& theta_out,
                    const fs::path& input, bool dir_mode) {
    if (theta_out.empty()) return;
    if (dir_mode) {
        fs::create_directories(theta_out);
        save_theta(theta, (fs::path(theta_out) / input.stem()).string() + ".theta");
    } else {
        save_theta(theta, theta_out);
    }
}

void cmd_enhance(const std::string& model_path, const std::string& input,
                 const std::string& output, const std::string& theta_out, int jobs) {
    auto model = nn::load_model(model_path);
    if (fs::is_directory(input)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && has_supported_extension(e.path().string()))
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        if (files.empty()) throw IoError("no supported images in directory " + input);
        fs::create_directories(output);
        if (jobs < 1) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

        std::vector<std::string> errors;
#pragma omp parallel for schedule(dynamic) num_threads(jobs)
        for (size_t i = 0; i < files.size(); ++i) {
            try {
                ImageBuffer img = load_image(files[i].string());
                CoefficientMatrix theta = predict_theta(*model, img);
                ImageBuffer out = apply_transform(img, theta);
                std::string out_path = (fs::path(output) / files[i].filename()).string();
                save_image(out, out_path);
                save_theta_for(theta, theta_out, files[i], true);
#pragma omp critical
                std::cerr << "enhanced " << files[i].string() << " -> " << out_path << "\n";
            } catch (const std::exception& e) {
#pragma omp critical
                errors.push_back(files[i].string() + ": " + e.what());
            }
        }
        if (!errors.empty()) throw IoError(errors.front());
    } else {
        ImageBuffer img = load_image(input);
        CoefficientMatrix theta = predict_theta(*model, img);
        save_image(apply_transform(img, theta), output);
        save_theta_for(theta, theta_out, fs::path(input), false);
        std::cerr << "enhanced " << input << " -> " << output << "\n";
    }
}

void cmd_apply_theta(const std::string& theta_path, const std::string& input,
                     const std::string& output) {
    CoefficientMatrix theta = load_theta(theta_path);
    save_image(apply_transform(load_image(input), theta), output);
    std::cerr << "applied " << theta_path << " to " << input << " -> " << output << "\n";
}

void cmd_fit_theta(const std::string& input, const std::string& target,
                   const std::string& theta_out, double ridge) {
    ImageBuffer x = load_image(input);
    ImageBuffer y = load_image(target);
    CoefficientMatrix theta = fit_least_squares(x, y, ridge);
    save_theta(theta, theta_out);
    double residual = mean_lab_l2(apply_transform_unclamped(x, theta), y);
    std::printf("residual_mean_lab_l2 %.9g\n", residual);
}

void cmd_train_paired(const std::string& manifest, const std::string& config_path,
                      const std::string& out_model, const KvMap& overrides) {
    TrainConfig cfg;  // defaults: 500 epochs, batch 50, lr 9e-4 -> 2e-6
    if (!config_path.empty()) apply_paired_config(parse_kv_file(config_path), cfg);
    apply_paired_config(overrides, cfg);
    cfg.validate();

    std::cerr << "loading paired dataset from " << manifest << "\n";
    PairedDataset ds = load_paired_dataset(manifest, cfg.resolution);
    std::cerr << "training on " << ds.size() << " pairs\n";
    PairedTrainResult r = train_paired(ds, cfg, [](const EpochStats& e) {
        std::fprintf(stderr, "epoch %d mean_lab_l2 %.6g lr %.3g\n", e.epoch, e.mean_loss, e.lr);
    });
    nn::save_model(*r.model, out_model);
    std::cerr << "model written to " << out_model << "\n";
}

void cmd_train_unpaired(const std::string& manifest_x, const std::string& manifest_y,
                        const std::string& config_path, const std::string& out_model,
                        const std::string& phase, const std::string& ablation,
                        const std::string& resume_gx, const std::string& resume_gy,
                        const KvMap& overrides) {
    GanConfig cfg;
    if (!config_path.empty()) apply_unpaired_config(parse_kv_file(config_path), cfg);
    apply_unpaired_config(overrides, cfg);
    cfg.validate();
    if (phase != "1" && phase != "2" && phase != "both")
        throw UsageError("--phase must be 1, 2 or both");

    UnpairedDataset ds = load_unpaired_dataset(manifest_x, manifest_y, cfg.resolution);
    std::cerr << "unpaired sets: " << ds.x_images.size() << " X images, " << ds.y_images.size()
              << " Y images\n";
    auto log_epoch = [](const GanEpochStats& e) {
        std::fprintf(stderr, "epoch %d cycle_x %.6g cycle_y %.6g gan %.4g/%.4g disc %.4g/%.4g lr %.3g\n",
                     e.epoch, e.cycle_x, e.cycle_y, e.gan_gx, e.gan_gy, e.disc_x, e.disc_y, e.lr);
    };

    UnpairedTrainResult state;
    if (!ablation.empty()) {
        state = ablation_run(ds, cfg, ablation_variant_from_name(ablation), log_epoch);
    } else if (phase == "2") {
        if (resume_gx.empty() || resume_gy.empty())
            throw UsageError("--phase 2 requires --resume-gx and --resume-gy models");
        state.pair.gx = nn::load_model(resume_gx);
        state.pair.gy = nn::load_model(resume_gy);
        train_phase2(state, ds, cfg, log_epoch);
    } else {
        state = train_phase1(ds, cfg, log_epoch);
        if (phase == "both" && cfg.phase2.enabled) train_phase2(state, ds, cfg, log_epoch);
    }
    nn::save_model(*state.pair.gx, out_model);
    nn::save_model(*state.pair.gy, out_model + ".gy");
    std::cerr << "models written to " << out_model << " (+.gy)\n";
}

void cmd_evaluate(const std::string& model_path, const std::string& manifest,
                  const std::string& report_path) {
    auto model = nn::load_model(model_path);
    auto entries = read_pair_manifest(manifest);
    std::vector<std::pair<ImageBuffer, ImageBuffer>> pairs;
    std::vector<std::string> ids;
    for (const auto& [in_path, tg_path] : entries) {
        ImageBuffer in = load_image(in_path);
        ImageBuffer tg = load_image(tg_path);
        pairs.emplace_back(enhance_image(*model, in), std::move(tg));
        ids.push_back(fs::path(in_path).filename().string());
        std::cerr << "evaluated " << in_path << "\n";
    }
    EvalReport report = evaluate_pairs(pairs, ids);
    if (!report_path.empty()) write_report_csv(report, report_path);
    std::cout << format_report_table(report);
}

void cmd_gradcheck(const std::string& layer, uint64_t seed, int cases) {
    struct Check {
        std::string name;
        GradCheckResult result;
    };
    std::vector<Check> checks;
    auto want = [&](const std::string& name) { return layer == "all" || layer == name; };

    for (auto kind : {nn::LayerKind::Conv2d, nn::LayerKind::BatchNorm, nn::LayerKind::LeakyRelu,
                      nn::LayerKind::Dropout, nn::LayerKind::AvgPoolGlobal, nn::LayerKind::Linear})
        if (want(nn::layer_kind_name(kind)))
            checks.push_back({nn::layer_kind_name(kind), gradcheck_layer(kind, seed, cases)});
    if (want("network")) checks.push_back({"network", gradcheck_network(seed, cases)});
    if (want("transform")) checks.push_back({"transform", gradcheck_transform(seed, cases)});
    if (want("transform-input"))
        checks.push_back({"transform-input", gradcheck_transform_input(seed, cases)});
    if (want("lab-loss")) checks.push_back({"lab-loss", gradcheck_lab_loss(seed, cases)});
    if (checks.empty())
        throw UsageError("unknown gradcheck target `" + layer +
                         "` (layer kind, network, transform, transform-input, lab-loss or all)");

    bool all_pass = true;
    for (const auto& c : checks) {
        bool ok = c.result.passed();
        all_pass = all_pass && ok;
        std::printf("gradcheck %-15s max_rel_err %.3e cases %-5d %s\n", c.name.c_str(),
                    c.result.max_rel_err, c.result.cases, ok ? "PASS" : "FAIL");
    }
    if (!all_pass) throw NumericError("gradient check failed");
}

void cmd_make_synthetic(int count, int size, const std::string& out_dir,
                        const std::string& theta_path, double noise, uint64_t seed) {
    CoefficientMatrix theta;
    if (!theta_path.empty()) {
        theta = load_theta(theta_path);
    } else {
        Rng rng(seed ^ 0x51e57a5ULL);
        for (double& t : theta.theta) t = rng.uniform(-0.05, 0.05);
    }
    SyntheticCorpus corpus = make_synthetic_corpus(count, size, theta, noise, seed, out_dir);
    std::cerr << "wrote " << corpus.input_paths.size() << " pairs under " << out_dir
              << " (theta sidecar: " << corpus.theta_path << ")\n";
    std::cout << out_dir << "/manifest.tsv\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parameterized color-enhancement engine"};
    app.require_subcommand(1);

    // enhance
    auto* enh = app.add_subcommand("enhance", "Enhance one image or a directory of images");
    std::string enh_model, enh_in, enh_out, enh_theta_out;
    int enh_jobs = 0;
    enh->add_option("--model", enh_model, "Trained model file")->required();
    enh->add_option("--input", enh_in, "Input image or directory")->required();
    enh->add_option("--output", enh_out, "Output image or directory")->required();
    enh->add_option("--theta-out", enh_theta_out, "Write predicted theta (file, or dir in batch mode)");
    enh->add_option("--jobs", enh_jobs, "Worker count for directory mode (default: logical CPUs)");
    enh->callback([&] { cmd_enhance(enh_model, enh_in, enh_out, enh_theta_out, enh_jobs); });

    // apply-theta
    auto* apl = app.add_subcommand("apply-theta", "Apply a serialized theta directly");
    std::string apl_theta, apl_in, apl_out;
    apl->add_option("--theta", apl_theta, "Theta file")->required();
    apl->add_option("--input", apl_in, "Input image")->required();
    apl->add_option("--output", apl_out, "Output image")->required();
    apl->callback([&] { cmd_apply_theta(apl_theta, apl_in, apl_out); });

    // fit-theta
    auto* fit = app.add_subcommand("fit-theta", "Least-squares theta between an image pair");
    std::string fit_in, fit_tg, fit_out;
    double fit_ridge = 0.0;
    fit->add_option("--input", fit_in, "Input image")->required();
    fit->add_option("--target", fit_tg, "Target image")->required();
    fit->add_option("--theta-out", fit_out, "Output theta file")->required();
    fit->add_option("--ridge", fit_ridge, "Ridge regularization strength");
    fit->callback([&] { cmd_fit_theta(fit_in, fit_tg, fit_out, fit_ridge); });

    // shared config-override plumbing for the two trainers: any of these
    // flags, when given, wins over the config file.
    auto add_override = [](CLI::App* cmd, KvMap& kv, const std::string& key,
                           const std::string& flag, const std::string& help) {
        cmd->add_option_function<std::string>(
               flag, [&kv, key](const std::string& v) { kv[key] = v; }, help)
            ->type_name("VALUE");
    };

    // train-paired
    auto* tp = app.add_subcommand("train-paired", "Supervised theta-regression training");
    std::string tp_manifest, tp_config, tp_out;
    KvMap tp_over;
    tp->add_option("--manifest", tp_manifest, "input<TAB>target manifest")->required();
    tp->add_option("--config", tp_config, "key = value config file");
    tp->add_option("--out-model", tp_out, "Output model file")->required();
    for (const auto& [key, help] :
         std::vector<std::pair<std::string, std::string>>{
             {"epochs", "Epoch count"},
             {"batch", "Batch size"},
             {"branches", "Generator branch count (1/3/5)"},
             {"branch_dropout", "Branch dropout rate"},
             {"resolution", "Training resolution"},
             {"seed", "RNG seed"},
             {"augment", "Enable flip/rotate augmentation"},
             {"lr0", "Initial learning rate"},
             {"lr_end", "Final learning rate"},
             {"stop_below_loss", "Early stop threshold"},
             {"checkpoint_interval", "Checkpoint every N epochs"},
             {"checkpoint_prefix", "Checkpoint file prefix"},
             {"history_path", "Loss-history CSV path"}}) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '_', '-');
        add_override(tp, tp_over, key, flag, help);
    }
    tp->callback([&] { cmd_train_paired(tp_manifest, tp_config, tp_out, tp_over); });

    // train-unpaired
    auto* tu = app.add_subcommand("train-unpaired", "Two-phase cycle-consistent GAN training");
    std::string tu_mx, tu_my, tu_config, tu_out, tu_phase = "both", tu_ablation;
    std::string tu_resume_gx, tu_resume_gy;
    KvMap tu_over;
    tu->add_option("--manifest-x", tu_mx, "X-set manifest (one path per line)")->required();
    tu->add_option("--manifest-y", tu_my, "Y-set manifest (one path per line)")->required();
    tu->add_option("--config", tu_config, "key = value config file");
    tu->add_option("--out-model", tu_out, "Output G_X model (G_Y saved as <path>.gy)")->required();
    tu->add_option("--phase", tu_phase, "1, 2 or both (default both)");
    tu->add_option("--ablation", tu_ablation, "Ablation arm name");
    tu->add_option("--resume-gx", tu_resume_gx, "Phase-1 G_X model (required for --phase 2)");
    tu->add_option("--resume-gy", tu_resume_gy, "Phase-1 G_Y model (required for --phase 2)");
    for (const auto& [key, help] :
         std::vector<std::pair<std::string, std::string>>{
             {"seed", "RNG seed"},
             {"resolution", "Training resolution"},
             {"augment", "Enable flip/rotate augmentation"},
             {"history_path", "Loss-history CSV path"},
             {"phase1.epochs", "Phase-1 epoch count"},
             {"phase1.batch", "Phase-1 batch size"},
             {"phase1.lr0", "Phase-1 learning rate"},
             {"phase1.alpha", "Cycle-loss weight"},
             {"phase2.epochs", "Phase-2 epoch count"},
             {"phase2.batch", "Phase-2 batch size"},
             {"phase2.lr0", "Phase-2 learning rate"}}) {
        std::string flag = "--" + key;
        std::replace(flag.begin(), flag.end(), '.', '-');
        std::replace(flag.begin(), flag.end(), '_', '-');
        add_override(tu, tu_over, key, flag, help);
    }
    tu->callback([&] {
        cmd_train_unpaired(tu_mx, tu_my, tu_config, tu_out, tu_phase, tu_ablation, tu_resume_gx,
                           tu_resume_gy, tu_over);
    });

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Lab-L2/PSNR/SSIM report over a paired manifest");
    std::string ev_model, ev_manifest, ev_report;
    ev->add_option("--model", ev_model, "Trained model file")->required();
    ev->add_option("--manifest", ev_manifest, "input<TAB>target manifest")->required();
    ev->add_option("--report", ev_report, "Report CSV path");
    ev->callback([&] { cmd_evaluate(ev_model, ev_manifest, ev_report); });

    // gradcheck
    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
    std::string gc_layer = "all";
    uint64_t gc_seed = 0;
    int gc_cases = 100;
    gc->add_option("--layer", gc_layer, "Layer kind, network, transform, transform-input, lab-loss or all");
    gc->add_option("--seed", gc_seed, "RNG seed");
    gc->add_option("--cases", gc_cases, "Coordinates checked per gradient");
    gc->callback([&] { cmd_gradcheck(gc_layer, gc_seed, gc_cases); });

    // make-synthetic
    auto* mk = app.add_subcommand("make-synthetic", "Generate a synthetic paired corpus");
    int mk_count = 0, mk_size = 0;
    std::string mk_out, mk_theta;
    double mk_noise = 0.0;
    uint64_t mk_seed = 0;
    mk->add_option("--count", mk_count, "Number of pairs")->required();
    mk->add_option("--size", mk_size, "Image side length")->required();
    mk->add_option("--out-dir", mk_out, "Output directory")->required();
    mk->add_option("--theta", mk_theta, "Planted theta file (default: random from seed)");
    mk->add_option("--noise", mk_noise, "Gaussian noise sigma on targets");
    mk->add_option("--seed", mk_seed, "RNG seed")->required();
    mk->callback([&] { cmd_make_synthetic(mk_count, mk_size, mk_out, mk_theta, mk_noise, mk_seed); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return 5;
    } catch (const NumericError& e) {
        std::cerr << "error: numeric: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 3;
    }
    return g_exit;
}
