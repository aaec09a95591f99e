#include "usgan/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace usgan {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

const char* color_type_name(int ct) {
    switch (ct) {
        case PNG_COLOR_TYPE_GRAY: return "grayscale";
        case PNG_COLOR_TYPE_PALETTE: return "palette";
        case PNG_COLOR_TYPE_RGB: return "RGB color";
        case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA color";
        case PNG_COLOR_TYPE_GRAY_ALPHA: return "grayscale+alpha";
        default: return "unknown";
    }
}

}  // namespace

std::size_t BackgroundMask::count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
}

Image load_image(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw DataError("cannot open image file: " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw DataError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("libpng initialization failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<png_byte> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("PNG decode error: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type != PNG_COLOR_TYPE_GRAY) {
        std::string ct = color_type_name(color_type);
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported color type (" + ct + ", need 8-bit grayscale): " +
                        path.string());
    }
    if (bit_depth != 8) {
        const int bd = bit_depth;
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("unsupported bit depth (" + std::to_string(bd) +
                        ", need 8): " + path.string());
    }

    raw.resize(static_cast<std::size_t>(height) * width);
    row_ptrs.resize(height);
    for (int r = 0; r < height; ++r)
        row_ptrs[r] = raw.data() + static_cast<std::size_t>(r) * width;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(height, width);
    img.source_path = path.string();
    for (std::size_t i = 0; i < raw.size(); ++i)
        img.pixels[i] = static_cast<double>(raw[i]) / 255.0;
    validate_image(img, path.string());
    return img;
}

void save_image(const Image& img, const std::filesystem::path& path) {
    if (img.height <= 0 || img.width <= 0) throw DataError("cannot save empty image");
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw DataError("cannot open for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialization failed");
    }
    std::vector<png_byte> raw(img.numel());
    std::vector<png_bytep> row_ptrs(img.height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("PNG encode error: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const double v = std::clamp(img.pixels[i], 0.0, 1.0);
        raw[i] = static_cast<png_byte>(std::lround(v * 255.0));
    }
    for (int r = 0; r < img.height; ++r)
        row_ptrs[r] = raw.data() + static_cast<std::size_t>(r) * img.width;
    png_write_info(png, info);
    png_write_image(png, row_ptrs.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void validate_image(const Image& img, const std::string& context) {
    if (img.height < 8 || img.width < 8)
        throw DataError("image smaller than 8x8 (" + std::to_string(img.height) +
                        "x" + std::to_string(img.width) + "): " + context);
    for (double v : img.pixels)
        if (!(v >= 0.0 && v <= 1.0))
            throw DataError("image intensity outside [0,1]: " + context);
}

namespace {

// Per-axis resampling weights: list of (first source index, taps).
struct AxisFilter {
    std::vector<int> start;
    std::vector<std::vector<double>> weights;
};

AxisFilter make_axis_filter(int in, int out) {
    AxisFilter f;
    f.start.resize(out);
    f.weights.resize(out);
    const double scale = static_cast<double>(in) / out;
    if (out >= in) {
        // bilinear, half-pixel centers, clamped at the border
        for (int o = 0; o < out; ++o) {
            const double src = (o + 0.5) * scale - 0.5;
            int i0 = static_cast<int>(std::floor(src));
            double frac = src - i0;
            if (i0 < 0) { i0 = 0; frac = 0.0; }
            if (i0 >= in - 1) { i0 = in - 1; frac = 0.0; }
            f.start[o] = i0;
            if (frac == 0.0)
                f.weights[o] = {1.0};
            else
                f.weights[o] = {1.0 - frac, frac};
        }
    } else {
        // area averaging: integrate the source over [o*scale, (o+1)*scale)
        for (int o = 0; o < out; ++o) {
            const double lo = o * scale;
            const double hi = (o + 1) * scale;
            const int i0 = static_cast<int>(std::floor(lo));
            const int i1 = std::min(in - 1, static_cast<int>(std::ceil(hi)) - 1);
            f.start[o] = i0;
            auto& w = f.weights[o];
            w.resize(i1 - i0 + 1);
            double total = 0.0;
            for (int i = i0; i <= i1; ++i) {
                const double cover = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
                w[i - i0] = cover;
                total += cover;
            }
            for (auto& v : w) v /= total;
        }
    }
    return f;
}

}  // namespace

Image resize(const Image& img, int out_h, int out_w) {
    if (out_h < 8 || out_w < 8)
        throw DataError("resize target smaller than 8x8");
    if (out_h == img.height && out_w == img.width) return img;

    const AxisFilter fw = make_axis_filter(img.width, out_w);
    const AxisFilter fh = make_axis_filter(img.height, out_h);

    // horizontal pass
    Image tmp(img.height, out_w);
    for (int r = 0; r < img.height; ++r)
        for (int o = 0; o < out_w; ++o) {
            double acc = 0.0;
            const auto& w = fw.weights[o];
            for (std::size_t t = 0; t < w.size(); ++t)
                acc += w[t] * img.at(r, fw.start[o] + static_cast<int>(t));
            tmp.at(r, o) = acc;
        }
    // vertical pass
    Image out(out_h, out_w);
    for (int o = 0; o < out_h; ++o)
        for (int c = 0; c < out_w; ++c) {
            double acc = 0.0;
            const auto& w = fh.weights[o];
            for (std::size_t t = 0; t < w.size(); ++t)
                acc += w[t] * tmp.at(fh.start[o] + static_cast<int>(t), c);
            out.at(o, c) = std::clamp(acc, 0.0, 1.0);
        }
    out.source_path = img.source_path;
    return out;
}

double otsu_threshold(const Image& img) {
    constexpr int kBins = 256;
    std::vector<double> p(kBins, 0.0);
    for (double v : img.pixels) p[intensity_bin(v, kBins)] += 1.0;
    const double n = static_cast<double>(img.numel());
    for (auto& v : p) v /= n;

    double mean_total = 0.0;
    for (int i = 0; i < kBins; ++i) mean_total += i * p[i];

    double best_var = 0.0;
    int best_k = -1;
    double w0 = 0.0, sum0 = 0.0;
    for (int k = 0; k < kBins - 1; ++k) {
        w0 += p[k];
        sum0 += k * p[k];
        const double w1 = 1.0 - w0;
        if (w0 <= 0.0 || w1 <= 0.0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (mean_total - sum0) / w1;
        const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if (between > best_var) {
            best_var = between;
            best_k = k;
        }
    }
    if (best_k < 0)
        throw DataError("otsu: no threshold separates classes (constant image)");
    // pixels with bin <= best_k fall below the cut
    return static_cast<double>(best_k + 1) / kBins;
}

BackgroundMask extract_background_mask(const Image& img, MaskMethod method,
                                       double fixed_threshold) {
    validate_image(img, "extract_background_mask");
    const double t = method == MaskMethod::kOtsu ? otsu_threshold(img) : fixed_threshold;
    BackgroundMask m;
    m.height = img.height;
    m.width = img.width;
    m.bits.resize(img.numel());
    std::size_t on = 0;
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const bool bg = img.pixels[i] < t;
        m.bits[i] = bg ? 1 : 0;
        on += bg;
    }
    m.coverage = static_cast<double>(on) / static_cast<double>(img.numel());
    return m;
}

BackgroundMask load_mask_file(const std::filesystem::path& path) {
    const Image img = load_image(path);
    BackgroundMask m;
    m.height = img.height;
    m.width = img.width;
    m.bits.resize(img.numel());
    std::size_t on = 0;
    for (std::size_t i = 0; i < img.numel(); ++i) {
        const bool bg = img.pixels[i] > 0.0;
        m.bits[i] = bg ? 1 : 0;
        on += bg;
    }
    m.coverage = static_cast<double>(on) / static_cast<double>(img.numel());
    return m;
}

Histogram masked_histogram(const Image& img, const BackgroundMask& mask, int bins) {
    if (bins < 2) throw DataError("histogram needs at least 2 bins");
    if (mask.height != img.height || mask.width != img.width)
        throw DataError("mask dimensions do not match image");
    Histogram h;
    h.bin_count = bins;
    h.counts_normalized.assign(bins, 0.0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < img.numel(); ++i) {
        if (!mask.bits[i]) continue;
        h.counts_normalized[intensity_bin(img.pixels[i], bins)] += 1.0;
        ++n;
    }
    if (n == 0) throw DataError("masked_histogram: mask selects no pixels");
    for (auto& v : h.counts_normalized) v /= static_cast<double>(n);
    h.mean_value = 1.0 / static_cast<double>(bins);  // entries sum to 1
    return h;
}

Histogram histogram_of_values(const std::vector<double>& values, int bins) {
    if (bins < 2) throw DataError("histogram needs at least 2 bins");
    if (values.empty()) throw DataError("histogram of empty pixel set");
    Histogram h;
    h.bin_count = bins;
    h.counts_normalized.assign(bins, 0.0);
    for (double v : values) h.counts_normalized[intensity_bin(v, bins)] += 1.0;
    for (auto& v : h.counts_normalized) v /= static_cast<double>(values.size());
    h.mean_value = 1.0 / static_cast<double>(bins);
    return h;
}

Image pad_to_multiple_reflect(const Image& img, int m) {
    const int new_h = (img.height + m - 1) / m * m;
    const int new_w = (img.width + m - 1) / m * m;
    if (new_h == img.height && new_w == img.width) return img;
    if (new_h - img.height >= img.height || new_w - img.width >= img.width)
        throw DataError("image too small to reflect-pad to a multiple of " +
                        std::to_string(m));
    Image out(new_h, new_w);
    out.source_path = img.source_path;
    auto mirror = [](int i, int n) { return i < n ? i : 2 * n - 2 - i; };
    for (int r = 0; r < new_h; ++r)
        for (int c = 0; c < new_w; ++c)
            out.at(r, c) = img.at(mirror(r, img.height), mirror(c, img.width));
    return out;
}

Image crop(const Image& img, int h, int w) {
    if (h > img.height || w > img.width) throw DataError("crop larger than image");
    Image out(h, w);
    out.source_path = img.source_path;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r, c);
    return out;
}

std::vector<std::filesystem::path> list_pngs(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace usgan
