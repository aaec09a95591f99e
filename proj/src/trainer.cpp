#include "usgan/trainer.hpp"

#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>

namespace usgan {

using ad::Var;

void TrainingConfig::validate() const {
    if (epochs_total < 1) throw DataError("epochs_total must be >= 1");
    if (epochs_constant_lr < 0 || epochs_constant_lr > epochs_total)
        throw DataError("epochs_constant_lr must lie in [0, epochs_total]");
    if (lr_initial <= 0) throw DataError("lr_initial must be > 0");
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (image_size < 8 || image_size % 8 != 0)
        throw DataError("image_size must be a positive multiple of 8");
    if (base_filters < 1) throw DataError("base_filters must be >= 1");
    if (checkpoint_every < 1) throw DataError("checkpoint_every must be >= 1");
    if (weights.lambda1 < 0 || weights.lambda2 < 0 || weights.w_content < 0 ||
        weights.w_reverb < 0)
        throw DataError("loss weights must be >= 0");
}

double lr_schedule(int epoch, const TrainingConfig& cfg) {
    if (epoch < 0 || epoch > cfg.epochs_total)
        throw DataError("epoch " + std::to_string(epoch) + " outside [0, " +
                        std::to_string(cfg.epochs_total) + "]");
    if (epoch < cfg.epochs_constant_lr) return cfg.lr_initial;
    const int denom = cfg.epochs_total - cfg.epochs_constant_lr;
    if (denom == 0) return epoch < cfg.epochs_total ? cfg.lr_initial : 0.0;
    return cfg.lr_initial * static_cast<double>(cfg.epochs_total - epoch) /
           static_cast<double>(denom);
}

LossLog::LossLog(const std::filesystem::path& path, bool append) : path_(path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const bool exists = std::filesystem::exists(path);
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw DataError("cannot open loss log: " + path.string());
    if (!append || !exists) out << kHeader << "\n";
}

void LossLog::append(const LossLogRecord& rec) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "%" PRIu64 ",%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  rec.iteration, rec.epoch, rec.losses.l_dr, rec.losses.l_dc,
                  rec.losses.l_content, rec.losses.l_reverb,
                  rec.losses.total_generator, rec.losses.total_d_r,
                  rec.losses.total_d_c, rec.lr);
    std::ofstream out(path_, std::ios::app);
    if (!out) throw DataError("cannot append to loss log: " + path_.string());
    out << buf;
}

namespace {

GeneratorConfig generator_config(const TrainingConfig& cfg) {
    GeneratorConfig g;
    g.base_filters = cfg.base_filters;
    return g;
}

DiscriminatorConfig discriminator_config(const TrainingConfig& cfg,
                                         DiscriminatorRole role) {
    DiscriminatorConfig d;
    d.base_filters = cfg.base_filters;
    d.role = role;
    return d;
}

}  // namespace

Models::Models(const TrainingConfig& cfg)
    : g(generator_config(cfg)),
      d_r(discriminator_config(cfg, DiscriminatorRole::kDomainRealism)),
      d_c(discriminator_config(cfg, DiscriminatorRole::kContent)) {}

Models::Models(const GeneratorConfig& gc, const DiscriminatorConfig& dc)
    : g(gc), d_r(dc), d_c([dc] {
          DiscriminatorConfig c = dc;
          c.role = DiscriminatorRole::kContent;
          return c;
      }()) {}

void Models::init_parameters(std::uint64_t seed) {
    g.init_parameters(seed);
    d_r.init_parameters(seed + 1);
    d_c.init_parameters(seed + 2);
}

LossLogRecord train_step(const Image& x, const Image& y, Models& m, Adam& opt_g,
                         Adam& opt_dr, Adam& opt_dc, const TrainingConfig& cfg,
                         double lr, std::uint64_t iteration, int epoch) {
    if (x.height != cfg.image_size || x.width != cfg.image_size ||
        y.height != cfg.image_size || y.width != cfg.image_size)
        throw DataError("train_step expects images preprocessed to " +
                        std::to_string(cfg.image_size) + "x" +
                        std::to_string(cfg.image_size));

    const Var x_in = Var::leaf(image_to_net(x));
    const Var y_in = Var::leaf(image_to_net(y));

    // translated image held constant for the discriminator updates
    Var gx_const;
    {
        ad::NoGradGuard no_grad;
        gx_const = m.g.forward(x_in).output;
    }
    if (!gx_const.value().all_finite())
        throw DivergenceError("non-finite generator output at iteration " +
                              std::to_string(iteration));

    // (1) realism discriminator
    opt_dr.zero_grad();
    Var dr_loss = adversarial_loss_dr(m.d_r.forward(y_in), m.d_r.forward(gx_const),
                                      LossSide::kDiscriminator, cfg.loss_form);
    ad::backward(dr_loss);
    opt_dr.step(lr);

    // (2) content discriminator
    opt_dc.zero_grad();
    Var dc_loss = adversarial_loss_dc(m.d_c.forward(x_in), m.d_c.forward(gx_const),
                                      LossSide::kDiscriminator, cfg.loss_form);
    ad::backward(dc_loss);
    opt_dc.step(lr);

    // (3) generator on the full objective. Content and Gram features come
    // from a frozen view of the current generator: the reference sides are
    // constants and the G(x) sides push gradients through the translated
    // image only. Routing them through live extractor weights leaves
    // degenerate optima (the encoder re-shapes itself to satisfy the
    // feature match instead of translating).
    opt_g.zero_grad();
    auto pass1 = m.g.forward(x_in, /*want_taps=*/false, /*want_content=*/true);
    const GeneratorNet feature_net = m.g.frozen_clone();
    auto pass2 = feature_net.forward(pass1.output, /*want_taps=*/true,
                                     /*want_content=*/true);
    std::vector<Var> taps_y;
    {
        ad::NoGradGuard no_grad;
        taps_y = feature_net.encoder_taps(y_in);
    }

    Var adv_r = adversarial_loss_dr(Var{}, m.d_r.forward(pass1.output),
                                    LossSide::kGenerator, cfg.loss_form);
    Var adv_c = adversarial_loss_dc(Var{}, m.d_c.forward(pass1.output),
                                    LossSide::kGenerator, cfg.loss_form);
    Var l_content = content_loss(pass2.content, pass1.content.detach());
    Var l_reverb = reverberation_loss(pass2.taps, taps_y);

    Var total = ad::scaled_sum({{cfg.weights.lambda1, adv_r},
                                {cfg.weights.lambda2, adv_c},
                                {cfg.weights.w_content, l_content},
                                {cfg.weights.w_reverb, l_reverb}});
    ad::backward(total);
    opt_g.step(lr);

    LossLogRecord rec;
    rec.iteration = iteration;
    rec.epoch = epoch;
    rec.lr = lr;
    try {
        rec.losses = total_objective(adv_r.scalar(), adv_c.scalar(),
                                     l_content.scalar(), l_reverb.scalar(),
                                     dr_loss.scalar(), dc_loss.scalar(), cfg.weights);
    } catch (const DivergenceError&) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "non-finite loss at iteration %" PRIu64
                      ": l_dr=%g l_dc=%g l_content=%g l_reverb=%g dr=%g dc=%g",
                      iteration, adv_r.scalar(), adv_c.scalar(), l_content.scalar(),
                      l_reverb.scalar(), dr_loss.scalar(), dc_loss.scalar());
        throw DivergenceError(buf);
    }
    return rec;
}

namespace {

Image load_training_image(const std::filesystem::path& path, int size) {
    Image img = load_image(path);
    if (img.height != size || img.width != size) img = resize(img, size, size);
    return img;
}

nlohmann::json rng_state_json(const Rng::State& st) {
    return {{"s", {st.s[0], st.s[1], st.s[2], st.s[3]}},
            {"have_gauss", st.have_gauss},
            {"gauss", st.gauss}};
}

Rng::State rng_state_from_json(const nlohmann::json& j) {
    Rng::State st;
    for (int i = 0; i < 4; ++i) st.s[i] = j.at("s").at(i).get<std::uint64_t>();
    st.have_gauss = j.at("have_gauss").get<bool>();
    st.gauss = j.at("gauss").get<double>();
    return st;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Models& m,
                     const Adam& opt_g, const Adam& opt_dr, const Adam& opt_dc,
                     int epoch, std::uint64_t iteration, const Rng::State& rng) {
    TensorStore store;
    nlohmann::json meta;
    meta["format"] = "usgan-checkpoint";
    meta["version"] = 1;
    meta["arch"] = {{"in_channels", m.g.config().in_channels},
                    {"base_filters", m.g.config().base_filters},
                    {"residual_blocks", m.g.config().residual_blocks},
                    {"tap_layers", m.g.config().tap_layers},
                    {"d_base_filters", m.d_r.config().base_filters}};
    meta["epoch"] = epoch;
    meta["iteration"] = iteration;
    meta["opt_steps"] = {{"g", opt_g.step_count()},
                         {"dr", opt_dr.step_count()},
                         {"dc", opt_dc.step_count()}};
    meta["rng"] = rng_state_json(rng);
    store.meta_json = meta.dump();

    auto push_params = [&store](const std::string& prefix,
                                const std::vector<std::pair<std::string, Var>>& ps) {
        for (const auto& [name, v] : ps) store.tensors.emplace_back(prefix + name, v.value());
    };
    push_params("g.", m.g.named_params());
    push_params("dr.", m.d_r.named_params());
    push_params("dc.", m.d_c.named_params());
    for (const auto& [name, t] : opt_g.state()) store.tensors.emplace_back("opt_g." + name, t);
    for (const auto& [name, t] : opt_dr.state()) store.tensors.emplace_back("opt_dr." + name, t);
    for (const auto& [name, t] : opt_dc.state()) store.tensors.emplace_back("opt_dc." + name, t);

    atomic_write_tensor_store(store, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    Checkpoint ckpt;
    ckpt.store = read_tensor_store(path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(ckpt.store.meta_json);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("checkpoint metadata unreadable in " + path.string() + ": " +
                        e.what());
    }
    if (meta.value("format", std::string{}) != "usgan-checkpoint")
        throw DataError("not a usgan checkpoint: " + path.string());
    const auto& arch = meta.at("arch");
    ckpt.g_config.in_channels = arch.at("in_channels").get<int>();
    ckpt.g_config.base_filters = arch.at("base_filters").get<int>();
    ckpt.g_config.residual_blocks = arch.at("residual_blocks").get<int>();
    ckpt.g_config.tap_layers = arch.at("tap_layers").get<std::vector<int>>();
    ckpt.d_config.in_channels = ckpt.g_config.in_channels;
    ckpt.d_config.base_filters = arch.at("d_base_filters").get<int>();
    ckpt.epoch = meta.at("epoch").get<int>();
    ckpt.iteration = meta.at("iteration").get<std::uint64_t>();
    ckpt.opt_g_steps = meta.at("opt_steps").at("g").get<std::uint64_t>();
    ckpt.opt_dr_steps = meta.at("opt_steps").at("dr").get<std::uint64_t>();
    ckpt.opt_dc_steps = meta.at("opt_steps").at("dc").get<std::uint64_t>();
    ckpt.rng_state = rng_state_from_json(meta.at("rng"));
    return ckpt;
}

namespace {

void load_params(const TensorStore& store, const std::string& prefix,
                 const std::vector<std::pair<std::string, Var>>& params) {
    for (const auto& [name, v] : params) {
        const Tensor* t = store.find(prefix + name);
        if (!t) throw DataError("checkpoint is missing tensor " + prefix + name);
        if (!t->same_shape(v.value()))
            throw DataError("checkpoint tensor " + prefix + name + " has shape " +
                            Tensor::shape_str(t->shape()) + ", model expects " +
                            Tensor::shape_str(v.value().shape()));
        Var var = v;
        var.value() = *t;
    }
}

std::vector<std::pair<std::string, Tensor>> optimizer_slice(const TensorStore& store,
                                                            const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& [name, t] : store.tensors)
        if (name.starts_with(prefix)) out.emplace_back(name.substr(prefix.size()), t);
    return out;
}

}  // namespace

void restore_from_checkpoint(const Checkpoint& ckpt, Models& m, Adam* opt_g,
                             Adam* opt_dr, Adam* opt_dc) {
    if (!(m.g.config() == ckpt.g_config))
        throw DataError("architecture mismatch: checkpoint generator (base_filters=" +
                        std::to_string(ckpt.g_config.base_filters) +
                        ", residual_blocks=" +
                        std::to_string(ckpt.g_config.residual_blocks) +
                        ") differs from the configured model");
    if (!(m.d_r.config().base_filters == ckpt.d_config.base_filters))
        throw DataError("architecture mismatch: checkpoint discriminator filters differ");
    load_params(ckpt.store, "g.", m.g.named_params());
    load_params(ckpt.store, "dr.", m.d_r.named_params());
    load_params(ckpt.store, "dc.", m.d_c.named_params());
    if (opt_g) opt_g->set_state(optimizer_slice(ckpt.store, "opt_g."), ckpt.opt_g_steps);
    if (opt_dr) opt_dr->set_state(optimizer_slice(ckpt.store, "opt_dr."), ckpt.opt_dr_steps);
    if (opt_dc) opt_dc->set_state(optimizer_slice(ckpt.store, "opt_dc."), ckpt.opt_dc_steps);
}

GeneratorNet generator_from_checkpoint(const Checkpoint& ckpt) {
    GeneratorNet g(ckpt.g_config);
    load_params(ckpt.store, "g.", g.named_params());
    return g;
}

TrainResult train(const std::filesystem::path& dataset_root, const TrainingConfig& cfg,
                  const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume_from) {
    cfg.validate();
    const auto source_files = list_pngs(dataset_root / "trainS");
    const auto target_files = list_pngs(dataset_root / "trainT");
    if (source_files.empty()) throw DataError("empty dataset directory: " +
                                              (dataset_root / "trainS").string());
    if (target_files.empty()) throw DataError("empty dataset directory: " +
                                              (dataset_root / "trainT").string());
    std::filesystem::create_directories(out_dir);

    Models models(cfg);
    models.init_parameters(cfg.seed);
    Adam opt_g(models.g.named_params(), cfg.adam_beta1, cfg.adam_beta2);
    Adam opt_dr(models.d_r.named_params(), cfg.adam_beta1, cfg.adam_beta2);
    Adam opt_dc(models.d_c.named_params(), cfg.adam_beta1, cfg.adam_beta2);

    Rng train_rng(cfg.seed);
    int start_epoch = 0;
    std::uint64_t iteration = 0;
    if (resume_from) {
        const Checkpoint ckpt = load_checkpoint(*resume_from);
        restore_from_checkpoint(ckpt, models, &opt_g, &opt_dr, &opt_dc);
        train_rng.set_state(ckpt.rng_state);
        start_epoch = ckpt.epoch;
        iteration = ckpt.iteration;
    }

    std::filesystem::path log_path = cfg.log_path;
    if (log_path.is_relative()) log_path = out_dir / log_path;
    LossLog log(log_path, /*append=*/resume_from.has_value());

    const std::size_t steps_per_epoch = std::min(source_files.size(), target_files.size());
    LossBreakdown last{};

    for (int epoch = start_epoch; epoch < cfg.epochs_total; ++epoch) {
        const double lr = lr_schedule(epoch, cfg);
        Rng epoch_rng = Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch) + 1);
        std::vector<std::size_t> perm(source_files.size());
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        epoch_rng.shuffle(perm.begin(), perm.end());

        for (std::size_t s = 0; s < steps_per_epoch; ++s) {
            const auto& x_path = source_files[perm[s]];
            const auto& y_path = target_files[epoch_rng.below(target_files.size())];
            Image x, y;
            try {
                x = load_training_image(x_path, cfg.image_size);
                y = load_training_image(y_path, cfg.image_size);
            } catch (const DataError& e) {
                if (cfg.abort_on_bad_image) throw;
                std::cerr << "warning: skipping unreadable image: " << e.what() << "\n";
                continue;
            }
            ++iteration;
            const LossLogRecord rec = train_step(x, y, models, opt_g, opt_dr, opt_dc,
                                                 cfg, lr, iteration, epoch);
            log.append(rec);
            last = rec.losses;
        }

        const int done = epoch + 1;
        if (done % cfg.checkpoint_every == 0 || done == cfg.epochs_total) {
            const auto ckpt_path = out_dir / ("ckpt_epoch_" + std::to_string(done));
            save_checkpoint(ckpt_path, models, opt_g, opt_dr, opt_dc, done, iteration,
                            train_rng.state());
            const auto latest_tmp = out_dir / "latest.tmp";
            std::filesystem::copy_file(ckpt_path, latest_tmp,
                                       std::filesystem::copy_options::overwrite_existing);
            std::filesystem::rename(latest_tmp, out_dir / "latest");
        }
    }

    TrainResult res;
    res.final_checkpoint = out_dir / "latest";
    res.loss_log = log_path;
    res.last_losses = last;
    res.iterations = iteration;
    return res;
}

}  // namespace usgan
