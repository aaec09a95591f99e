#include "usgan/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace usgan {

double bhattacharyya(const Histogram& h1, const Histogram& h2) {
    if (h1.bin_count != h2.bin_count)
        throw DataError("bhattacharyya: bin counts differ (" +
                        std::to_string(h1.bin_count) + " vs " +
                        std::to_string(h2.bin_count) + ")");
    const int n = h1.bin_count;
    double sum1 = 0, sum2 = 0, overlap = 0;
    for (int i = 0; i < n; ++i) {
        sum1 += h1.counts_normalized[i];
        sum2 += h2.counts_normalized[i];
        overlap += std::sqrt(h1.counts_normalized[i] * h2.counts_normalized[i]);
    }
    // hbar*N == sum of entries
    if (sum1 <= 0 || sum2 <= 0) throw DataError("bhattacharyya: zero-mean histogram");
    double inner = 1.0 - overlap / std::sqrt(sum1 * sum2);
    if (inner < 0.0) {
        if (inner < -1e-9) throw DataError("bhattacharyya: inner value out of range");
        inner = 0.0;
    }
    if (inner > 1.0) {
        if (inner > 1.0 + 1e-9) throw DataError("bhattacharyya: inner value out of range");
        inner = 1.0;
    }
    return std::sqrt(inner);
}

double histogram_correlation(const Histogram& h1, const Histogram& h2) {
    if (h1.bin_count != h2.bin_count)
        throw DataError("histogram_correlation: bin counts differ");
    const int n = h1.bin_count;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        m1 += h1.counts_normalized[i];
        m2 += h2.counts_normalized[i];
    }
    m1 /= n;
    m2 /= n;
    double num = 0, v1 = 0, v2 = 0;
    for (int i = 0; i < n; ++i) {
        const double d1 = h1.counts_normalized[i] - m1;
        const double d2 = h2.counts_normalized[i] - m2;
        num += d1 * d2;
        v1 += d1 * d1;
        v2 += d2 * d2;
    }
    if (v1 <= 0.0 || v2 <= 0.0)
        throw DataError("histogram_correlation: undefined correlation for a "
                        "zero-variance (uniform) histogram");
    double r = num / std::sqrt(v1 * v2);
    // clamp float noise, the true value lies in [-1,1]
    return std::clamp(r, -1.0, 1.0);
}

namespace {

// 11-tap Gaussian window, sigma 1.5, normalized.
std::vector<double> ssim_window() {
    constexpr int kHalf = 5;
    std::vector<double> w(2 * kHalf + 1);
    double sum = 0;
    for (int i = -kHalf; i <= kHalf; ++i) {
        w[i + kHalf] = std::exp(-(i * i) / (2.0 * 1.5 * 1.5));
        sum += w[i + kHalf];
    }
    for (auto& v : w) v /= sum;
    return w;
}

int mirror_index(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

// Separable Gaussian filtering with reflected borders; output same size.
std::vector<double> gauss_filter(const std::vector<double>& img, int h, int w) {
    static const std::vector<double> win = ssim_window();
    const int half = static_cast<int>(win.size()) / 2;
    std::vector<double> tmp(img.size()), out(img.size());
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int t = -half; t <= half; ++t)
                acc += win[t + half] * img[static_cast<std::size_t>(r) * w +
                                           mirror_index(c + t, w)];
            tmp[static_cast<std::size_t>(r) * w + c] = acc;
        }
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            double acc = 0;
            for (int t = -half; t <= half; ++t)
                acc += win[t + half] * tmp[static_cast<std::size_t>(mirror_index(r + t, h)) * w + c];
            out[static_cast<std::size_t>(r) * w + c] = acc;
        }
    return out;
}

}  // namespace

std::pair<double, SSIMMap> ssim(const Image& a, const Image& b,
                                const BackgroundMask* mask) {
    if (a.height != b.height || a.width != b.width)
        throw DataError("ssim: image dimensions differ (" + std::to_string(a.height) +
                        "x" + std::to_string(a.width) + " vs " +
                        std::to_string(b.height) + "x" + std::to_string(b.width) + ")");
    if (mask && (mask->height != a.height || mask->width != a.width))
        throw DataError("ssim: mask dimensions differ from images");

    const int h = a.height, w = a.width;
    const std::size_t n = a.numel();
    constexpr double kC1 = 0.01 * 0.01;  // (K1*L)^2, L=1
    constexpr double kC2 = 0.03 * 0.03;

    std::vector<double> aa(n), bb(n), ab(n);
    for (std::size_t i = 0; i < n; ++i) {
        aa[i] = a.pixels[i] * a.pixels[i];
        bb[i] = b.pixels[i] * b.pixels[i];
        ab[i] = a.pixels[i] * b.pixels[i];
    }
    const auto mu_a = gauss_filter(a.pixels, h, w);
    const auto mu_b = gauss_filter(b.pixels, h, w);
    const auto m_aa = gauss_filter(aa, h, w);
    const auto m_bb = gauss_filter(bb, h, w);
    const auto m_ab = gauss_filter(ab, h, w);

    SSIMMap map;
    map.height = h;
    map.width = w;
    map.values.resize(n);
    double sum = 0, sum_mask = 0;
    std::size_t n_mask = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = m_aa[i] - ma * ma;
        const double vb = m_bb[i] - mb * mb;
        const double cov = m_ab[i] - ma * mb;
        const double v = ((2 * ma * mb + kC1) * (2 * cov + kC2)) /
                         ((ma * ma + mb * mb + kC1) * (va + vb + kC2));
        map.values[i] = v;
        sum += v;
        if (mask && mask->bits[i]) {
            sum_mask += v;
            ++n_mask;
        }
    }
    double scalar;
    if (mask) {
        if (n_mask == 0) throw DataError("ssim: mask selects no pixels");
        scalar = sum_mask / static_cast<double>(n_mask);
    } else {
        scalar = sum / static_cast<double>(n);
    }
    map.mean_over_mask = scalar;
    return {scalar, map};
}

void save_ssim_map(const SSIMMap& map, const std::filesystem::path& path) {
    Image img(map.height, map.width);
    for (std::size_t i = 0; i < img.numel(); ++i)
        img.pixels[i] = std::clamp((map.values[i] + 1.0) * 0.5, 0.0, 1.0);
    save_image(img, path);
}

namespace {

BackgroundMask mask_for(const Image& img, const std::filesystem::path& filename,
                        const EvaluateOptions& opts) {
    switch (opts.mask_source) {
        case MaskSource::kOtsu:
            return extract_background_mask(img, MaskMethod::kOtsu);
        case MaskSource::kFixed:
            return extract_background_mask(img, MaskMethod::kFixed, opts.fixed_threshold);
        case MaskSource::kFiles: {
            const auto p = opts.mask_dir / filename;
            if (!std::filesystem::exists(p))
                throw DataError("mask file not found: " + p.string());
            return load_mask_file(p);
        }
    }
    throw DataError("unreachable mask source");
}

double population_sd(const std::vector<double>& xs, double mean) {
    if (xs.empty()) return 0.0;
    double acc = 0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

}  // namespace

MetricReport evaluate_set(const std::filesystem::path& candidate_dir,
                          const std::filesystem::path& reference_dir,
                          const EvaluateOptions& opts) {
    const auto candidates = list_pngs(candidate_dir);
    const auto references = list_pngs(reference_dir);
    if (candidates.empty()) throw DataError("no PNG files in " + candidate_dir.string());
    if (references.empty()) throw DataError("no PNG files in " + reference_dir.string());

    // reference histograms (own masks), indexed by filename, plus the pool
    std::map<std::string, std::size_t> ref_index;
    std::vector<Histogram> ref_hists;
    std::vector<Image> ref_images;
    std::vector<double> pooled_pixels;
    for (const auto& rp : references) {
        const Image ref = load_image(rp);
        const BackgroundMask m = mask_for(ref, rp.filename(), opts);
        if (m.count() == 0) throw DataError("reference mask empty for " + rp.string());
        ref_index.emplace(rp.filename().string(), ref_images.size());
        ref_hists.push_back(masked_histogram(ref, m, opts.bins));
        for (std::size_t i = 0; i < ref.numel(); ++i)
            if (m.bits[i]) pooled_pixels.push_back(ref.pixels[i]);
        ref_images.push_back(ref);
    }
    const Histogram pooled = histogram_of_values(pooled_pixels, opts.bins);

    if (opts.ssim_map_dir) std::filesystem::create_directories(*opts.ssim_map_dir);

    MetricReport report;
    std::vector<double> bds, hcs, ssims;
    for (std::size_t ci = 0; ci < candidates.size(); ++ci) {
        const auto& cp = candidates[ci];
        const Image cand = load_image(cp);
        const BackgroundMask cmask = mask_for(cand, cp.filename(), opts);
        if (cmask.count() == 0)
            throw DataError("candidate mask empty for " + cp.string());
        const Histogram ch = masked_histogram(cand, cmask, opts.bins);

        const std::string name = cp.filename().string();
        const auto matched = ref_index.find(name);
        if (opts.pairing == PairingMode::kFilename && matched == ref_index.end())
            throw DataError("no reference with filename " + name);
        const bool use_pair = opts.pairing != PairingMode::kPooled &&
                              matched != ref_index.end();

        const Histogram& ref_hist = use_pair ? ref_hists[matched->second] : pooled;
        MetricReport::Row row;
        row.filename = name;
        row.bd = bhattacharyya(ch, ref_hist);
        row.hc = histogram_correlation(ch, ref_hist);

        // SSIM needs a concrete partner: the matched file when available,
        // otherwise the index-aligned reference; candidate mask applies.
        const Image& partner = use_pair ? ref_images[matched->second]
                                        : ref_images[ci % ref_images.size()];
        auto [sval, smap] = ssim(cand, partner, &cmask);
        row.ssim = sval;
        if (opts.ssim_map_dir) save_ssim_map(smap, *opts.ssim_map_dir / name);

        report.per_image.push_back(row);
        bds.push_back(row.bd);
        hcs.push_back(row.hc);
        ssims.push_back(row.ssim);
    }

    std::sort(report.per_image.begin(), report.per_image.end(),
              [](const auto& a, const auto& b) { return a.filename < b.filename; });

    const auto mean = [](const std::vector<double>& xs) {
        double s = 0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
    };
    report.bd_mean = mean(bds);
    report.hc_mean = mean(hcs);
    report.ssim_mean = mean(ssims);
    report.bd_sd = population_sd(bds, report.bd_mean);
    report.hc_sd = population_sd(hcs, report.hc_mean);
    report.ssim_sd = population_sd(ssims, report.ssim_mean);
    return report;
}

void write_report_csv(const MetricReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write report CSV: " + path.string());
    out << "filename,bd,hc,ssim\n";
    char buf[512];
    for (const auto& row : report.per_image) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g\n", row.filename.c_str(),
                      row.bd, row.hc, row.ssim);
        out << buf;
    }
}

void write_report_json(const MetricReport& report, const std::filesystem::path& path) {
    nlohmann::json j;
    j["bd_mean"] = report.bd_mean;
    j["bd_sd"] = report.bd_sd;
    j["hc_mean"] = report.hc_mean;
    j["hc_sd"] = report.hc_sd;
    j["ssim_mean"] = report.ssim_mean;
    j["ssim_sd"] = report.ssim_sd;
    j["n"] = report.per_image.size();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write report JSON: " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace usgan
