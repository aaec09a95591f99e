#ifndef USGAN_SYNTH_HPP
#define USGAN_SYNTH_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "usgan/image.hpp"

namespace usgan {

struct ReverbSpec {
    int band_count = 3;
    double band_brightness = 0.35;
    int band_spacing_px = 5;
};

// Procedural ultrasound-like phantom: dark lumen band with bright wall
// lines in mid-gray tissue, multiplied by a correlated unit-mean speckle
// field. The smoothing that sets the speckle grain also narrows the
// intensity marginal, so grain alone separates the background histograms
// of two domains (what translation must close). Optional reverberation
// renders periodic bright bands inside the lumen.
struct PhantomSpec {
    int image_size = 400;
    double lumen_top_frac = 0.25;
    double lumen_bottom_frac = 0.55;
    double wall_brightness = 0.85;
    double speckle_grain_px = 2.0;   // correlation length
    double speckle_contrast = 0.7;
    std::optional<ReverbSpec> reverberation;
    std::uint64_t seed = 0;

    void validate() const;
};

struct PhantomSample {
    Image image;
    BackgroundMask true_background;  // exact lumen pixels
};

PhantomSample generate_phantom(const PhantomSpec& spec);

// Writes trainS/trainT/testS/testT plus masks/ (ground-truth backgrounds,
// nonzero = background) and manifest.json under out_root. Filenames are
// s_NNNN.png / t_NNNN.png with test indices continuing after train, so the
// two domains never collide on filename. Byte-identical for equal specs.
void generate_corpus(const PhantomSpec& spec_source, const PhantomSpec& spec_target,
                     int n_train, int n_test, const std::filesystem::path& out_root);

// Regenerates a corpus from its manifest (determinism check hook).
void generate_corpus_from_manifest(const std::filesystem::path& manifest_path,
                                   const std::filesystem::path& out_root);

// Periodicity of horizontal bands in the lumen: Pearson correlation of the
// demeaned lumen patch with itself shifted down by `lag_px` rows, clamped
// at zero. Near 1 for clean periodic bands at that spacing, near 0 for
// band-free speckle.
double lumen_periodicity_score(const Image& img, double top_frac, double bottom_frac,
                               int lag_px);

struct CorpusPreset {
    std::string name;
    PhantomSpec source;
    PhantomSpec target;
};

// texture-shift: domains differ only in speckle grain. reverb: the source
// additionally carries reverberation bands in the lumen.
CorpusPreset make_preset(const std::string& name, int image_size, std::uint64_t seed);

}  // namespace usgan

#endif
