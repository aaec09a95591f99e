#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "usgan/config.hpp"
#include "usgan/metrics.hpp"
#include "usgan/nets.hpp"
#include "usgan/synth.hpp"
#include "usgan/trainer.hpp"

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

int run_synth(const std::string& preset_name, const std::string& manifest,
              int n_train, int n_test, int image_size, std::uint64_t seed,
              const std::string& out) {
    if (!manifest.empty()) {
        usgan::generate_corpus_from_manifest(manifest, out);
    } else {
        const auto preset = usgan::make_preset(preset_name, image_size, seed);
        usgan::generate_corpus(preset.source, preset.target, n_train, n_test, out);
    }
    std::cout << "corpus written, manifest: "
              << (std::filesystem::path(out) / "manifest.json").string() << "\n";
    return 0;
}

int run_train(const usgan::TrainingConfig& cfg, const std::string& data,
              const std::string& out, const std::optional<std::string>& resume) {
    std::optional<std::filesystem::path> resume_path;
    if (resume) resume_path = *resume;
    const usgan::TrainResult res = usgan::train(data, cfg, out, resume_path);
    const auto& l = res.last_losses;
    std::printf("final losses: l_dr=%.6g l_dc=%.6g l_content=%.6g l_reverb=%.6g "
                "total_g=%.6g total_dr=%.6g total_dc=%.6g\n",
                l.l_dr, l.l_dc, l.l_content, l.l_reverb, l.total_generator,
                l.total_d_r, l.total_d_c);
    std::cout << "checkpoint: " << res.final_checkpoint.string() << "\n";
    std::cout << "loss log: " << res.loss_log.string() << "\n";
    return 0;
}

int run_translate(const std::string& checkpoint, const std::string& input_dir,
                  const std::string& out_dir) {
    const usgan::Checkpoint ckpt = usgan::load_checkpoint(checkpoint);
    const usgan::GeneratorNet g = usgan::generator_from_checkpoint(ckpt);
    const auto files = usgan::list_pngs(input_dir);
    if (files.empty()) throw usgan::DataError("no PNG files in " + input_dir);
    std::filesystem::create_directories(out_dir);
    for (const auto& f : files) {
        usgan::Image img = usgan::load_image(f);
        const int orig_h = img.height, orig_w = img.width;
        if (orig_h % 8 != 0 || orig_w % 8 != 0) {
            img = usgan::pad_to_multiple_reflect(img, 8);
            std::cerr << "note: " << f.filename().string() << " reflect-padded "
                      << orig_h << "x" << orig_w << " -> " << img.height << "x"
                      << img.width << " for translation\n";
        }
        usgan::ad::NoGradGuard no_grad;
        const auto out = g.forward(usgan::ad::Var::leaf(usgan::image_to_net(img)));
        usgan::Image translated = usgan::net_to_image(out.output.value());
        if (translated.height != orig_h || translated.width != orig_w)
            translated = usgan::crop(translated, orig_h, orig_w);
        usgan::save_image(translated, std::filesystem::path(out_dir) / f.filename());
    }
    std::cout << files.size() << " images translated to " << out_dir << "\n";
    return 0;
}

int run_eval(const std::string& candidate, const std::string& reference,
             const usgan::EvaluateOptions& opts, const std::string& out_dir) {
    const usgan::MetricReport report = usgan::evaluate_set(candidate, reference, opts);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        usgan::write_report_csv(report, std::filesystem::path(out_dir) / "metrics.csv");
        usgan::write_report_json(report, std::filesystem::path(out_dir) / "summary.json");
    }
    std::printf("BD %.3f (%.3f)\n", report.bd_mean, report.bd_sd);
    std::printf("HC %.3f (%.3f)\n", report.hc_mean, report.hc_sd);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"unpaired ultrasound domain adaptation: dual-discriminator GAN "
                 "pipeline (synthesize, train, translate, evaluate)"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "generate a two-domain phantom corpus");
    std::string synth_preset = "texture-shift";
    std::string synth_manifest;
    int synth_n_train = 50, synth_n_test = 10, synth_image_size = 64;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    synth->add_option("--preset", synth_preset, "texture-shift | reverb");
    synth->add_option("--manifest", synth_manifest,
                      "regenerate from an existing manifest.json");
    synth->add_option("--n-train", synth_n_train, "training images per domain");
    synth->add_option("--n-test", synth_n_test, "test images per domain");
    synth->add_option("--image-size", synth_image_size, "square image size in px");
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--out", synth_out, "output dataset root")->required();

    // ---- train ----
    auto* train = app.add_subcommand("train", "train the translation model");
    std::string train_data, train_out = "runs/train", train_config;
    std::optional<std::string> train_resume;
    train->add_option("--data", train_data, "dataset root (trainS/, trainT/)")->required();
    train->add_option("--out", train_out, "output directory (checkpoints, loss CSV)");
    train->add_option("--config", train_config, "key = value config file");
    std::optional<int> o_epochs, o_epochs_const, o_batch, o_image_size, o_filters,
        o_ckpt_every;
    std::optional<double> o_lr, o_beta1, o_beta2, o_l1, o_l2, o_wc, o_wr;
    std::optional<std::uint64_t> o_seed;
    std::optional<std::string> o_loss_form, o_log_path;
    train->add_option("--epochs-total,--epochs", o_epochs, "total epochs");
    train->add_option("--epochs-constant-lr,--epochs-constant", o_epochs_const,
                      "epochs at the initial learning rate");
    train->add_option("--lr-initial,--lr", o_lr, "initial learning rate");
    train->add_option("--batch-size", o_batch, "batch size");
    train->add_option("--adam-beta1", o_beta1, "Adam beta1");
    train->add_option("--adam-beta2", o_beta2, "Adam beta2");
    train->add_option("--lambda1", o_l1, "adversarial realism weight");
    train->add_option("--lambda2", o_l2, "adversarial content weight");
    train->add_option("--w-content", o_wc, "content loss weight");
    train->add_option("--w-reverb", o_wr, "reverberation loss weight");
    train->add_option("--seed", o_seed, "training seed");
    train->add_option("--image-size", o_image_size, "square input size (multiple of 8)");
    train->add_option("--base-filters", o_filters, "first conv layer filters");
    train->add_option("--loss-form", o_loss_form, "log | least_squares");
    train->add_option("--checkpoint-every", o_ckpt_every, "checkpoint period (epochs)");
    train->add_option("--log-path", o_log_path, "loss CSV path (relative to --out)");
    train->add_option("--resume", train_resume, "checkpoint to resume from");

    // ---- translate ----
    auto* translate = app.add_subcommand("translate", "run the generator over a directory");
    std::string tr_ckpt, tr_input, tr_out;
    translate->add_option("--checkpoint", tr_ckpt, "trained checkpoint")->required();
    translate->add_option("--input", tr_input, "directory of PNG inputs")->required();
    translate->add_option("--out", tr_out, "output directory")->required();

    // ---- eval ----
    auto* eval = app.add_subcommand("eval", "background BD/HC/SSIM metrics");
    std::string ev_candidate, ev_reference, ev_out, ev_mask = "otsu", ev_masks_dir,
                ev_pairing = "auto", ev_ssim_maps;
    double ev_threshold = 0.1;
    int ev_bins = 256;
    eval->add_option("--candidate", ev_candidate, "candidate image directory")->required();
    eval->add_option("--reference", ev_reference, "reference image directory")->required();
    eval->add_option("--out", ev_out, "directory for metrics.csv and summary.json");
    eval->add_option("--mask", ev_mask, "otsu | fixed | files");
    eval->add_option("--threshold", ev_threshold, "threshold for --mask fixed");
    eval->add_option("--masks", ev_masks_dir, "mask directory for --mask files");
    eval->add_option("--bins", ev_bins, "histogram bins");
    eval->add_option("--pairing", ev_pairing, "auto | filename | pooled");
    eval->add_option("--ssim-maps", ev_ssim_maps, "write per-pair SSIM map PNGs here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);  // prints the message/usage
        return e.get_exit_code() == 0 ? 0 : kExitUsage;
    }

    try {
        if (synth->parsed())
            return run_synth(synth_preset, synth_manifest, synth_n_train, synth_n_test,
                             synth_image_size, synth_seed, synth_out);
        if (train->parsed()) {
            usgan::TrainingConfig cfg;
            if (!train_config.empty()) cfg = usgan::load_training_config(train_config, cfg);
            if (o_epochs) cfg.epochs_total = *o_epochs;
            if (o_epochs_const) cfg.epochs_constant_lr = *o_epochs_const;
            if (o_lr) cfg.lr_initial = *o_lr;
            if (o_batch) cfg.batch_size = *o_batch;
            if (o_beta1) cfg.adam_beta1 = *o_beta1;
            if (o_beta2) cfg.adam_beta2 = *o_beta2;
            if (o_l1) cfg.weights.lambda1 = *o_l1;
            if (o_l2) cfg.weights.lambda2 = *o_l2;
            if (o_wc) cfg.weights.w_content = *o_wc;
            if (o_wr) cfg.weights.w_reverb = *o_wr;
            if (o_seed) cfg.seed = *o_seed;
            if (o_image_size) cfg.image_size = *o_image_size;
            if (o_filters) cfg.base_filters = *o_filters;
            if (o_loss_form) cfg.loss_form = usgan::loss_form_from_string(*o_loss_form);
            if (o_ckpt_every) cfg.checkpoint_every = *o_ckpt_every;
            if (o_log_path) cfg.log_path = *o_log_path;
            return run_train(cfg, train_data, train_out, train_resume);
        }
        if (translate->parsed()) return run_translate(tr_ckpt, tr_input, tr_out);
        if (eval->parsed()) {
            usgan::EvaluateOptions opts;
            if (ev_mask == "otsu") opts.mask_source = usgan::MaskSource::kOtsu;
            else if (ev_mask == "fixed") opts.mask_source = usgan::MaskSource::kFixed;
            else if (ev_mask == "files") opts.mask_source = usgan::MaskSource::kFiles;
            else throw usgan::DataError("unknown --mask '" + ev_mask +
                                        "' (otsu | fixed | files)");
            opts.fixed_threshold = ev_threshold;
            opts.mask_dir = ev_masks_dir;
            if (opts.mask_source == usgan::MaskSource::kFiles && ev_masks_dir.empty())
                throw usgan::DataError("--mask files requires --masks <dir>");
            opts.bins = ev_bins;
            if (ev_pairing == "auto") opts.pairing = usgan::PairingMode::kAuto;
            else if (ev_pairing == "filename") opts.pairing = usgan::PairingMode::kFilename;
            else if (ev_pairing == "pooled") opts.pairing = usgan::PairingMode::kPooled;
            else throw usgan::DataError("unknown --pairing '" + ev_pairing +
                                        "' (auto | filename | pooled)");
            if (!ev_ssim_maps.empty()) opts.ssim_map_dir = ev_ssim_maps;
            return run_eval(ev_candidate, ev_reference, opts, ev_out);
        }
    } catch (const usgan::DivergenceError& e) {
        std::cerr << "error (divergence): " << e.what() << "\n";
        return kExitDivergence;
    } catch (const usgan::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
