#ifndef USGAN_METRICS_HPP
#define USGAN_METRICS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "usgan/image.hpp"

namespace usgan {

// Bhattacharyya distance between histograms, the scale-normalized form:
//   BD = sqrt(1 - sum_I sqrt(h1(I) h2(I)) / sqrt(hbar1 hbar2 N^2))
// which is 0 for identical histograms and 1 for disjoint supports. The
// inner value is clamped to [0,1] (tolerance 1e-9) to absorb float noise.
double bhattacharyya(const Histogram& h1, const Histogram& h2);

// Pearson correlation of the bin vectors. A zero-variance (uniform)
// histogram has no defined correlation and raises an error.
double histogram_correlation(const Histogram& h1, const Histogram& h2);

struct SSIMMap {
    int height = 0;
    int width = 0;
    std::vector<double> values;  // per-pixel local SSIM in [-1,1]
    double mean_over_mask = 0.0;

    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * width + c]; }
};

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1. The scalar is the map mean over mask-true
// pixels when a mask is given, else the global mean.
std::pair<double, SSIMMap> ssim(const Image& a, const Image& b,
                                const BackgroundMask* mask = nullptr);

// Writes an SSIM map as an 8-bit PNG, [-1,1] mapped affinely to [0,255].
void save_ssim_map(const SSIMMap& map, const std::filesystem::path& path);

enum class MaskSource { kOtsu, kFixed, kFiles };
enum class PairingMode { kAuto, kFilename, kPooled };

struct EvaluateOptions {
    MaskSource mask_source = MaskSource::kOtsu;
    double fixed_threshold = 0.1;
    std::filesystem::path mask_dir;  // used with kFiles
    int bins = 256;
    PairingMode pairing = PairingMode::kAuto;
    std::optional<std::filesystem::path> ssim_map_dir;
};

struct MetricReport {
    struct Row {
        std::string filename;
        double bd = 0.0;
        double hc = 0.0;
        double ssim = 0.0;
    };
    std::vector<Row> per_image;  // sorted by filename
    double bd_mean = 0.0, bd_sd = 0.0;
    double hc_mean = 0.0, hc_sd = 0.0;
    double ssim_mean = 0.0, ssim_sd = 0.0;
};

// Evaluation protocol: every candidate image is masked (its own mask),
// reduced to a background histogram, and scored against the reference. A
// reference image with the same filename is used pairwise; otherwise the
// pooled histogram of all reference backgrounds serves as reference.
MetricReport evaluate_set(const std::filesystem::path& candidate_dir,
                          const std::filesystem::path& reference_dir,
                          const EvaluateOptions& opts = {});

void write_report_csv(const MetricReport& report, const std::filesystem::path& path);
void write_report_json(const MetricReport& report, const std::filesystem::path& path);

}  // namespace usgan

#endif
