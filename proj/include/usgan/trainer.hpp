#ifndef USGAN_TRAINER_HPP
#define USGAN_TRAINER_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "usgan/losses.hpp"
#include "usgan/nets.hpp"
#include "usgan/optim.hpp"
#include "usgan/rng.hpp"
#include "usgan/serialize.hpp"

namespace usgan {

struct TrainingConfig {
    int epochs_total = 180;
    int epochs_constant_lr = 100;
    double lr_initial = 0.0002;
    int batch_size = 1;
    double adam_beta1 = 0.5;
    double adam_beta2 = 0.999;
    LossWeights weights;
    std::uint64_t seed = 0;
    int image_size = 400;
    int base_filters = 64;
    LossForm loss_form = LossForm::kLog;
    int checkpoint_every = 10;           // epochs
    std::string log_path = "loss_log.csv";
    bool abort_on_bad_image = true;      // alternative: skip with a warning

    void validate() const;
};

struct LossLogRecord {
    std::uint64_t iteration = 0;  // generator updates so far (1-based)
    int epoch = 0;
    LossBreakdown losses;
    double lr = 0.0;
};

// CSV sink, one row per generator update. Full-precision floats so logs
// round-trip and deterministic runs compare byte-identical.
class LossLog {
public:
    LossLog(const std::filesystem::path& path, bool append);
    void append(const LossLogRecord& rec);
    static constexpr const char* kHeader =
        "iteration,epoch,l_dr,l_dc,l_content,l_reverb,total_g,total_dr,total_dc,lr";

private:
    std::filesystem::path path_;
};

struct Models {
    GeneratorNet g;
    DiscriminatorNet d_r;
    DiscriminatorNet d_c;

    explicit Models(const TrainingConfig& cfg);
    Models(const GeneratorConfig& gc, const DiscriminatorConfig& dc);
    void init_parameters(std::uint64_t seed);
};

// Constant lr for the first epochs_constant_lr epochs, then linear decay
// reaching exactly zero at epochs_total. Valid for 0 <= epoch <= total.
double lr_schedule(int epoch, const TrainingConfig& cfg);

// One optimization iteration: D_R update, D_C update (translated image held
// constant for both), then a generator update on the full objective with
// fresh forward passes for content and reverberation features.
LossLogRecord train_step(const Image& x, const Image& y, Models& m, Adam& opt_g,
                         Adam& opt_dr, Adam& opt_dc, const TrainingConfig& cfg,
                         double lr, std::uint64_t iteration, int epoch);

struct TrainResult {
    std::filesystem::path final_checkpoint;
    std::filesystem::path loss_log;
    LossBreakdown last_losses;
    std::uint64_t iterations = 0;
};

// Full training loop over <root>/trainS and <root>/trainT. Each epoch walks
// a seeded shuffle of the source set for min(|S|,|T|) steps, drawing the
// target uniformly per step. Writes ckpt_epoch_<N> files plus a `latest`
// alias under out_dir, and the loss CSV.
TrainResult train(const std::filesystem::path& dataset_root,
                  const TrainingConfig& cfg, const std::filesystem::path& out_dir,
                  const std::optional<std::filesystem::path>& resume_from = {});

// --- checkpoints ---------------------------------------------------------

struct Checkpoint {
    GeneratorConfig g_config;
    DiscriminatorConfig d_config;
    int epoch = 0;                 // completed epochs
    std::uint64_t iteration = 0;   // completed generator updates
    std::uint64_t opt_g_steps = 0, opt_dr_steps = 0, opt_dc_steps = 0;
    Rng::State rng_state{};
    TensorStore store;
};

void save_checkpoint(const std::filesystem::path& path, const Models& m,
                     const Adam& opt_g, const Adam& opt_dr, const Adam& opt_dc,
                     int epoch, std::uint64_t iteration, const Rng::State& rng);

Checkpoint load_checkpoint(const std::filesystem::path& path);

// Loads parameters (and optimizer state when optimizers are given) into
// freshly built models. Shapes are validated tensor by tensor.
void restore_from_checkpoint(const Checkpoint& ckpt, Models& m, Adam* opt_g,
                             Adam* opt_dr, Adam* opt_dc);

// Builds a generator directly from checkpoint metadata (for translation).
GeneratorNet generator_from_checkpoint(const Checkpoint& ckpt);

}  // namespace usgan

#endif
