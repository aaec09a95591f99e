#include "usgan/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "usgan/rng.hpp"

namespace usgan {

void PhantomSpec::validate() const {
    if (image_size < 16) throw DataError("phantom image_size must be >= 16");
    if (!(0.0 <= lumen_top_frac && lumen_top_frac < lumen_bottom_frac &&
          lumen_bottom_frac <= 1.0))
        throw DataError("phantom lumen band fractions must satisfy 0 <= top < bottom <= 1");
    if (speckle_grain_px < 1.0) throw DataError("speckle grain must be >= 1 px");
    if (speckle_contrast < 0.0 || speckle_contrast > 1.0)
        throw DataError("speckle contrast must lie in [0,1]");
    if (wall_brightness < 0.0 || wall_brightness > 1.0)
        throw DataError("wall brightness must lie in [0,1]");
    if (reverberation) {
        if (reverberation->band_count < 1 || reverberation->band_spacing_px < 2)
            throw DataError("reverberation needs band_count >= 1, spacing >= 2");
    }
}

namespace {

// 1-D Gaussian taps, sigma derived from the correlation length.
std::vector<double> grain_kernel(double grain_px) {
    const double sigma = std::max(0.3, grain_px / 2.0);
    const int half = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * half + 1);
    double sum = 0;
    for (int i = -half; i <= half; ++i) {
        k[i + half] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + half];
    }
    for (auto& v : k) v /= sum;
    return k;
}

std::vector<double> smooth_rows(const std::vector<double>& in, int h, int w,
                                const std::vector<double>& k) {
    const int half = static_cast<int>(k.size()) / 2;
    std::vector<double> out(in.size(), 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int t = -half; t <= half; ++t) {
                int cc = std::clamp(c + t, 0, w - 1);
                acc += k[t + half] * in[static_cast<std::size_t>(r) * w + cc];
            }
            out[static_cast<std::size_t>(r) * w + c] = acc;
        }
    return out;
}

std::vector<double> smooth_cols(const std::vector<double>& in, int h, int w,
                                const std::vector<double>& k) {
    const int half = static_cast<int>(k.size()) / 2;
    std::vector<double> out(in.size(), 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int t = -half; t <= half; ++t) {
                int rr = std::clamp(r + t, 0, h - 1);
                acc += k[t + half] * in[static_cast<std::size_t>(rr) * w + c];
            }
            out[static_cast<std::size_t>(r) * w + c] = acc;
        }
    return out;
}

constexpr double kTissueLevel = 0.5;
constexpr double kLumenLevel = 0.06;

}  // namespace

PhantomSample generate_phantom(const PhantomSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int s = spec.image_size;

    // small per-image anatomy jitter so a corpus is not one repeated frame
    const double jt = rng.uniform(-0.03, 0.03);
    const double jb = rng.uniform(-0.03, 0.03);
    const double top_f = std::clamp(spec.lumen_top_frac + jt, 0.05, 0.9);
    const double bot_f = std::clamp(spec.lumen_bottom_frac + jb, top_f + 0.1, 0.95);
    const int top_row = static_cast<int>(std::lround(top_f * s));
    const int bottom_row = static_cast<int>(std::lround(bot_f * s));
    const int wall_px = std::max(1, s / 64);

    Image img(s, s, kTissueLevel);
    for (int r = std::max(0, top_row - wall_px); r < top_row; ++r)
        for (int c = 0; c < s; ++c) img.at(r, c) = spec.wall_brightness;
    for (int r = bottom_row; r < std::min(s, bottom_row + wall_px); ++r)
        for (int c = 0; c < s; ++c) img.at(r, c) = spec.wall_brightness;
    for (int r = top_row; r < bottom_row; ++r)
        for (int c = 0; c < s; ++c) img.at(r, c) = kLumenLevel;

    // multiplicative speckle: smoothed white noise, exponentiated with the
    // analytic lognormal mean correction (no variance renormalization, so
    // the grain shapes the marginal too)
    if (spec.speckle_contrast > 0.0) {
        std::vector<double> noise(static_cast<std::size_t>(s) * s);
        for (auto& v : noise) v = rng.gaussian();
        const auto k = grain_kernel(spec.speckle_grain_px);
        noise = smooth_cols(smooth_rows(noise, s, s, k), s, s, k);
        double k2 = 0;
        for (double v : k) k2 += v * v;
        const double log_var = spec.speckle_contrast * spec.speckle_contrast * k2 * k2;
        for (std::size_t i = 0; i < img.numel(); ++i)
            img.pixels[i] *= std::exp(spec.speckle_contrast * noise[i] - 0.5 * log_var);
    }

    if (spec.reverberation) {
        const auto& rv = *spec.reverberation;
        const double sigma = std::max(0.6, rv.band_spacing_px / 6.0);
        for (int b = 0; b < rv.band_count; ++b) {
            const int center = top_row + rv.band_spacing_px / 2 + b * rv.band_spacing_px;
            if (center >= bottom_row - 1) break;
            for (int r = std::max(0, center - 3); r <= std::min(s - 1, center + 3); ++r) {
                const double g = rv.band_brightness *
                                 std::exp(-(r - center) * (r - center) / (2 * sigma * sigma));
                for (int c = 0; c < s; ++c) img.at(r, c) += g;
            }
        }
    }

    for (auto& v : img.pixels) v = std::clamp(v, 0.0, 1.0);

    PhantomSample sample;
    sample.image = std::move(img);
    sample.true_background.height = s;
    sample.true_background.width = s;
    sample.true_background.bits.assign(static_cast<std::size_t>(s) * s, 0);
    std::size_t on = 0;
    for (int r = top_row; r < bottom_row; ++r)
        for (int c = 0; c < s; ++c) {
            sample.true_background.bits[static_cast<std::size_t>(r) * s + c] = 1;
            ++on;
        }
    sample.true_background.coverage = static_cast<double>(on) / (static_cast<double>(s) * s);
    return sample;
}

namespace {

nlohmann::json spec_to_json(const PhantomSpec& p) {
    nlohmann::json j;
    j["image_size"] = p.image_size;
    j["lumen_top_frac"] = p.lumen_top_frac;
    j["lumen_bottom_frac"] = p.lumen_bottom_frac;
    j["wall_brightness"] = p.wall_brightness;
    j["speckle_grain_px"] = p.speckle_grain_px;
    j["speckle_contrast"] = p.speckle_contrast;
    j["seed"] = p.seed;
    if (p.reverberation)
        j["reverberation"] = {{"band_count", p.reverberation->band_count},
                              {"band_brightness", p.reverberation->band_brightness},
                              {"band_spacing_px", p.reverberation->band_spacing_px}};
    return j;
}

PhantomSpec spec_from_json(const nlohmann::json& j) {
    PhantomSpec p;
    p.image_size = j.at("image_size").get<int>();
    p.lumen_top_frac = j.at("lumen_top_frac").get<double>();
    p.lumen_bottom_frac = j.at("lumen_bottom_frac").get<double>();
    p.wall_brightness = j.at("wall_brightness").get<double>();
    p.speckle_grain_px = j.at("speckle_grain_px").get<double>();
    p.speckle_contrast = j.at("speckle_contrast").get<double>();
    p.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("reverberation")) {
        ReverbSpec rv;
        rv.band_count = j["reverberation"].at("band_count").get<int>();
        rv.band_brightness = j["reverberation"].at("band_brightness").get<double>();
        rv.band_spacing_px = j["reverberation"].at("band_spacing_px").get<int>();
        p.reverberation = rv;
    }
    return p;
}

std::string index_name(char domain, int idx) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%c_%04d.png", domain, idx);
    return buf;
}

void write_domain(const PhantomSpec& base, char tag, int n_train, int n_test,
                  const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    const fs::path train_dir = root / (std::string("train") + (tag == 's' ? "S" : "T"));
    const fs::path test_dir = root / (std::string("test") + (tag == 's' ? "S" : "T"));
    fs::create_directories(train_dir);
    fs::create_directories(test_dir);
    fs::create_directories(root / "masks");
    for (int i = 0; i < n_train + n_test; ++i) {
        PhantomSpec per_image = base;
        per_image.seed = Rng::derive(base.seed, static_cast<std::uint64_t>(i)).next_u64();
        const PhantomSample sample = generate_phantom(per_image);
        const std::string name = index_name(tag, i);
        const fs::path img_path = (i < n_train ? train_dir : test_dir) / name;
        save_image(sample.image, img_path);
        Image mask_img(sample.true_background.height, sample.true_background.width);
        for (std::size_t p = 0; p < mask_img.numel(); ++p)
            mask_img.pixels[p] = sample.true_background.bits[p] ? 1.0 : 0.0;
        save_image(mask_img, root / "masks" / name);
    }
}

}  // namespace

void generate_corpus(const PhantomSpec& spec_source, const PhantomSpec& spec_target,
                     int n_train, int n_test, const std::filesystem::path& out_root) {
    if (n_train < 1 || n_test < 1)
        throw DataError("corpus needs n_train >= 1 and n_test >= 1");
    spec_source.validate();
    spec_target.validate();
    std::filesystem::create_directories(out_root);

    write_domain(spec_source, 's', n_train, n_test, out_root);
    write_domain(spec_target, 't', n_train, n_test, out_root);

    nlohmann::json manifest;
    manifest["spec_source"] = spec_to_json(spec_source);
    manifest["spec_target"] = spec_to_json(spec_target);
    manifest["n_train"] = n_train;
    manifest["n_test"] = n_test;
    std::ofstream out(out_root / "manifest.json", std::ios::trunc);
    if (!out) throw DataError("cannot write manifest under " + out_root.string());
    out << manifest.dump(2) << "\n";
}

void generate_corpus_from_manifest(const std::filesystem::path& manifest_path,
                                   const std::filesystem::path& out_root) {
    std::ifstream in(manifest_path);
    if (!in) throw DataError("cannot open manifest: " + manifest_path.string());
    nlohmann::json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed manifest " + manifest_path.string() + ": " + e.what());
    }
    generate_corpus(spec_from_json(manifest.at("spec_source")),
                    spec_from_json(manifest.at("spec_target")),
                    manifest.at("n_train").get<int>(), manifest.at("n_test").get<int>(),
                    out_root);
}

double lumen_periodicity_score(const Image& img, double top_frac, double bottom_frac,
                               int lag_px) {
    const int top = static_cast<int>(std::lround(top_frac * img.height));
    const int bottom = static_cast<int>(std::lround(bottom_frac * img.height));
    const int rows = bottom - top;
    if (lag_px < 1 || rows - lag_px < 3)
        throw DataError("periodicity: lumen band too short for lag " +
                        std::to_string(lag_px));

    // Pearson correlation of the lumen patch with itself shifted by the lag
    const int n_rows = rows - lag_px;
    const std::size_t n = static_cast<std::size_t>(n_rows) * img.width;
    double mu = 0, mv = 0;
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < img.width; ++c) {
            mu += img.at(top + r, c);
            mv += img.at(top + r + lag_px, c);
        }
    mu /= static_cast<double>(n);
    mv /= static_cast<double>(n);
    double num = 0, vu = 0, vv = 0;
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < img.width; ++c) {
            const double du = img.at(top + r, c) - mu;
            const double dv = img.at(top + r + lag_px, c) - mv;
            num += du * dv;
            vu += du * du;
            vv += dv * dv;
        }
    if (vu <= 0 || vv <= 0) return 0.0;
    return std::max(0.0, num / std::sqrt(vu * vv));
}

CorpusPreset make_preset(const std::string& name, int image_size, std::uint64_t seed) {
    CorpusPreset preset;
    preset.name = name;
    PhantomSpec src, tgt;
    src.image_size = tgt.image_size = image_size;
    src.speckle_grain_px = 1.5;
    src.speckle_contrast = 0.55;
    src.seed = seed;
    tgt.speckle_grain_px = 4.0;
    tgt.speckle_contrast = 0.45;
    tgt.seed = seed + 0x51ED270B;
    if (name == "texture-shift") {
        // grain-only gap
    } else if (name == "reverb") {
        ReverbSpec rv;
        rv.band_count = 3;
        rv.band_brightness = 0.35;
        rv.band_spacing_px = std::max(4, image_size / 13);
        src.reverberation = rv;
    } else {
        throw DataError("unknown preset '" + name +
                        "' (expected texture-shift | reverb)");
    }
    preset.source = src;
    preset.target = tgt;
    return preset;
}

}  // namespace usgan
