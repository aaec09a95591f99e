#ifndef USGAN_IMAGE_HPP
#define USGAN_IMAGE_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "usgan/common.hpp"

namespace usgan {

// 2-D grayscale image, intensities in [0,1]. On disk: 8-bit grayscale PNG.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;  // row-major, height*width
    std::optional<std::string> source_path;

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int r, int c) { return pixels[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return pixels[static_cast<std::size_t>(r) * width + c]; }
    std::size_t numel() const { return pixels.size(); }
};

struct BackgroundMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // 1 = background pixel
    double coverage = 0.0;           // fraction of true pixels

    bool at(int r, int c) const { return bits[static_cast<std::size_t>(r) * width + c] != 0; }
    std::size_t count() const;
};

struct Histogram {
    std::vector<double> counts_normalized;  // length bin_count, sums to 1
    double mean_value = 0.0;                // (1/N) * sum of entries
    int bin_count = 0;
    double range_lo = 0.0;
    double range_hi = 1.0;
};

enum class MaskMethod { kOtsu, kFixed };

// --- image I/O ---------------------------------------------------------

// Loads an 8-bit grayscale PNG; intensities divided by 255. Rejects color,
// palette and non-8-bit files with an error naming the property.
Image load_image(const std::filesystem::path& path);

// Writes an 8-bit grayscale PNG; values clamped to [0,1] then rounded to
// the nearest of the 256 levels.
void save_image(const Image& img, const std::filesystem::path& path);

// Validates the spec contract (min size, finite values in range).
void validate_image(const Image& img, const std::string& context);

// --- preprocessing ------------------------------------------------------

// Separable resample: per axis, area averaging when shrinking (antialias)
// and bilinear interpolation otherwise. Identity size is an exact copy;
// output clamped to [0,1].
Image resize(const Image& img, int out_h, int out_w);

// Threshold background extraction: mask true where intensity < threshold.
// With kOtsu the threshold comes from the image's own 256-bin histogram;
// a constant image has no class separation and raises an error.
BackgroundMask extract_background_mask(const Image& img, MaskMethod method,
                                       double fixed_threshold = 0.0);

// Between-class-variance maximizing 8-bit threshold (first argmax).
// Returns the real-valued cut t such that "v < t" selects the lower class.
double otsu_threshold(const Image& img);

// Loads an external mask PNG (nonzero = background) for the image.
BackgroundMask load_mask_file(const std::filesystem::path& path);

// Normalized histogram over mask-true pixels; bins partition [0,1].
Histogram masked_histogram(const Image& img, const BackgroundMask& mask, int bins);

// Histogram of a pre-collected pixel set (used for pooled references).
Histogram histogram_of_values(const std::vector<double>& values, int bins);

// Bin index of an intensity in [0,1] for an N-bin histogram.
inline int intensity_bin(double v, int bins) {
    int b = static_cast<int>(v * bins);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    return b;
}

// Pads at the bottom/right edge by mirroring so both dimensions become
// multiples of m (translation-time fixup for arbitrary inputs).
Image pad_to_multiple_reflect(const Image& img, int m);

// Crops the top-left h x w window.
Image crop(const Image& img, int h, int w);

// Sorted list of *.png files directly inside a directory.
std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir);

}  // namespace usgan

#endif
