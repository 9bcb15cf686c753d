#include "gausskin/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "gausskin/errors.hpp"

namespace gausskin {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01; // (K1 * L)^2
constexpr double kC2 = 0.03 * 0.03; // (K2 * L)^2

void require_same_size(const FrameBuffer& a, const FrameBuffer& b) {
    if (a.width != b.width || a.height != b.height)
        throw DataError("image dimension mismatch: " + std::to_string(a.width) + "x" +
                        std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                        std::to_string(b.height));
}

std::vector<double> gaussian_kernel() {
    std::vector<double> k(kWindow);
    double total = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - (kWindow - 1) / 2.0;
        k[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        total += k[i];
    }
    for (double& v : k) v /= total;
    return k;
}

// Separable windowed mean over one channel plane; output is the valid
// region (width-10) x (height-10).
void blur(const std::vector<double>& plane, int width, int height,
          const std::vector<double>& kernel, std::vector<double>& out) {
    const int out_w = width - kWindow + 1;
    const int out_h = height - kWindow + 1;
    std::vector<double> rows(std::size_t(out_w) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += kernel[k] * plane[std::size_t(y) * width + x + k];
            rows[std::size_t(y) * out_w + x] = acc;
        }
    out.resize(std::size_t(out_w) * out_h);
    for (int y = 0; y < out_h; ++y)
        for (int x = 0; x < out_w; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += kernel[k] * rows[std::size_t(y + k) * out_w + x];
            out[std::size_t(y) * out_w + x] = acc;
        }
}

} // namespace

double psnr(const FrameBuffer& a, const FrameBuffer& b) {
    require_same_size(a, b);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = a.rgb[i] - b.rgb[i];
        acc += d * d;
    }
    const double mse = acc / double(a.rgb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const FrameBuffer& a, const FrameBuffer& b) {
    require_same_size(a, b);
    if (a.width < kWindow || a.height < kWindow)
        throw DataError("image too small for ssim: need both sides >= " + std::to_string(kWindow));

    const std::vector<double> kernel = gaussian_kernel();
    const std::size_t pixels = std::size_t(a.width) * a.height;
    std::vector<double> pa(pixels), pb(pixels), paa(pixels), pbb(pixels), pab(pixels);
    std::vector<double> ma, mb, maa, mbb, mab;

    double total = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < 3; ++ch) {
        for (std::size_t i = 0; i < pixels; ++i) {
            const double va = a.rgb[3 * i + ch];
            const double vb = b.rgb[3 * i + ch];
            pa[i] = va;
            pb[i] = vb;
            paa[i] = va * va;
            pbb[i] = vb * vb;
            pab[i] = va * vb;
        }
        blur(pa, a.width, a.height, kernel, ma);
        blur(pb, a.width, a.height, kernel, mb);
        blur(paa, a.width, a.height, kernel, maa);
        blur(pbb, a.width, a.height, kernel, mbb);
        blur(pab, a.width, a.height, kernel, mab);

        for (std::size_t i = 0; i < ma.size(); ++i) {
            const double mu_a = ma[i], mu_b = mb[i];
            const double var_a = maa[i] - mu_a * mu_a;
            const double var_b = mbb[i] - mu_b * mu_b;
            const double cov = mab[i] - mu_a * mu_b;
            const double num = (2.0 * (mu_a * mu_b) + kC1) * (2.0 * cov + kC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2);
            total += num / den;
            ++count;
        }
    }
    return total / double(count);
}

MetricReport compare_images(const FrameBuffer& a, const FrameBuffer& b) {
    MetricReport r;
    r.psnr = psnr(a, b);
    r.ssim = ssim(a, b);
    r.pixel_count = std::size_t(a.width) * a.height;
    return r;
}

double mean_abs_difference(const FrameBuffer& a, const FrameBuffer& b) {
    require_same_size(a, b);
    if (a.rgb.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) acc += std::abs(a.rgb[i] - b.rgb[i]);
    return acc / double(a.rgb.size());
}

} // namespace gausskin
