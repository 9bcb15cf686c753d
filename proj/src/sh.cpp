#include "gausskin/sh.hpp"

#include <atomic>
#include <cmath>
#include <cstring>

#include "gausskin/errors.hpp"

namespace gausskin {

namespace {

// 3DGS basis constants.
constexpr double kC0 = 0.28209479177387814;
constexpr double kC1 = 0.4886025119029199;
constexpr double kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr double kC3[7] = {-0.5900435899266435, 2.890611442640554, -0.4570457994644658,
                           0.3731763325901154, -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

std::atomic<bool> g_corrupt_wigner{false};

// Band-l rotation from band l-1 and the band-1 matrix, after Ivanic &
// Ruedenberg's recurrence (with the published errata). Index offset: entry
// (m, n) lives at [m + l][n + l].
void recur_band(int l, const double* prev, int prev_dim, const double d1[3][3], double* out) {
    const int dim = 2 * l + 1;
    auto prev_at = [&](int a, int b) { return prev[(a + l - 1) * prev_dim + (b + l - 1)]; };
    auto d1_at = [&](int i, int j) { return d1[i + 1][j + 1]; };

    auto p = [&](int i, int a, int b) {
        if (b == l) return d1_at(i, 1) * prev_at(a, l - 1) - d1_at(i, -1) * prev_at(a, -l + 1);
        if (b == -l) return d1_at(i, 1) * prev_at(a, -l + 1) + d1_at(i, -1) * prev_at(a, l - 1);
        return d1_at(i, 0) * prev_at(a, b);
    };

    for (int m = -l; m <= l; ++m) {
        for (int n = -l; n <= l; ++n) {
            const double denom = (std::abs(n) == l) ? (2.0 * l) * (2.0 * l - 1.0)
                                                    : double(l + n) * double(l - n);
            const double delta = m == 0 ? 1.0 : 0.0;
            const double uc = std::sqrt(double(l + m) * double(l - m) / denom);
            const double vc = 0.5 *
                              std::sqrt((1.0 + delta) * double(l + std::abs(m) - 1) *
                                        double(l + std::abs(m)) / denom) *
                              (1.0 - 2.0 * delta);
            const double wc = -0.5 *
                              std::sqrt(double(l - std::abs(m) - 1) * double(l - std::abs(m)) / denom) *
                              (1.0 - delta);

            double value = 0.0;
            if (uc != 0.0) value += uc * p(0, m, n);
            if (vc != 0.0) {
                double v;
                if (m == 0) {
                    v = p(1, 1, n) + p(-1, -1, n);
                } else if (m > 0) {
                    v = (m == 1) ? std::sqrt(2.0) * p(1, 0, n)
                                 : p(1, m - 1, n) - p(-1, -m + 1, n);
                } else {
                    v = (m == -1) ? std::sqrt(2.0) * p(-1, 0, n)
                                  : p(1, m + 1, n) + p(-1, -m - 1, n);
                }
                value += vc * v;
            }
            if (wc != 0.0) {
                const double w = (m > 0) ? p(1, m + 1, n) + p(-1, -m - 1, n)
                                         : p(1, m - 1, n) - p(-1, -m + 1, n);
                value += wc * w;
            }
            out[(m + l) * dim + (n + l)] = value;
        }
    }
}

bool is_identity(const RotationMatrix& r) {
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (r.m[i][j] != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

// Cyclic Jacobi for the 16x16 symmetric normal matrix of the projection fit.
void jacobi16(double a[16][16], double v[16][16]) {
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) v[i][j] = i == j ? 1.0 : 0.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 16; ++p)
            for (int q = p + 1; q < 16; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-26) break;
        for (int p = 0; p < 16; ++p) {
            for (int q = p + 1; q < 16; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 16; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 16; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = a[q][p] = 0.0;
                for (int k = 0; k < 16; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
}

} // namespace

std::array<double, 16> sh_basis(const Vec3& d) {
    const double x = d.x, y = d.y, z = d.z;
    const double xx = x * x, yy = y * y, zz = z * z;
    std::array<double, 16> b;
    b[0] = kC0;
    b[1] = -kC1 * y;
    b[2] = kC1 * z;
    b[3] = -kC1 * x;
    b[4] = kC2[0] * x * y;
    b[5] = kC2[1] * y * z;
    b[6] = kC2[2] * (2.0 * zz - xx - yy);
    b[7] = kC2[3] * x * z;
    b[8] = kC2[4] * (xx - yy);
    b[9] = kC3[0] * y * (3.0 * xx - yy);
    b[10] = kC3[1] * x * y * z;
    b[11] = kC3[2] * y * (4.0 * zz - xx - yy);
    b[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
    b[13] = kC3[4] * x * (4.0 * zz - xx - yy);
    b[14] = kC3[5] * z * (xx - yy);
    b[15] = kC3[6] * x * (xx - 3.0 * yy);
    return b;
}

Vec3 sh_eval_color(const ShCoefficients& coeffs, const Vec3& direction) {
    const std::array<double, 16> b = sh_basis(direction);
    Vec3 rgb;
    double* out[3] = {&rgb.x, &rgb.y, &rgb.z};
    for (int ch = 0; ch < 3; ++ch) {
        double acc = 0.0;
        for (int k = 0; k < 16; ++k) acc += b[k] * coeffs.c[k][ch];
        *out[ch] = std::max(0.0, acc + 0.5);
    }
    return rgb;
}

WignerBlocks wigner_blocks(const RotationMatrix& r) {
    WignerBlocks w;
    const auto& m = r.m.m;
    // Band 1 in the real-SH component order (-1, 0, +1) = (y, z, x) with the
    // 3DGS sign convention folded in.
    w.d1[0][0] = m[1][1];
    w.d1[0][1] = -m[1][2];
    w.d1[0][2] = m[1][0];
    w.d1[1][0] = -m[2][1];
    w.d1[1][1] = m[2][2];
    w.d1[1][2] = -m[2][0];
    w.d1[2][0] = m[0][1];
    w.d1[2][1] = -m[0][2];
    w.d1[2][2] = m[0][0];

    recur_band(2, &w.d1[0][0], 3, w.d1, &w.d2[0][0]);
    recur_band(3, &w.d2[0][0], 5, w.d1, &w.d3[0][0]);

    if (g_corrupt_wigner.load(std::memory_order_relaxed)) w.d2[0][0] = -w.d2[0][0];
    return w;
}

ShCoefficients rotate_sh(const ShCoefficients& coeffs, const WignerBlocks& blocks) {
    ShCoefficients out;
    for (int ch = 0; ch < 3; ++ch) {
        out.c[0][ch] = coeffs.c[0][ch];
        for (int i = 0; i < 3; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 3; ++j) acc += blocks.d1[i][j] * coeffs.c[1 + j][ch];
            out.c[1 + i][ch] = acc;
        }
        for (int i = 0; i < 5; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 5; ++j) acc += blocks.d2[i][j] * coeffs.c[4 + j][ch];
            out.c[4 + i][ch] = acc;
        }
        for (int i = 0; i < 7; ++i) {
            double acc = 0.0;
            for (int j = 0; j < 7; ++j) acc += blocks.d3[i][j] * coeffs.c[9 + j][ch];
            out.c[9 + i][ch] = acc;
        }
    }
    return out;
}

ShCoefficients rotate_sh(const ShCoefficients& coeffs, const RotationMatrix& r) {
    if (is_identity(r)) return coeffs;
    return rotate_sh(coeffs, wigner_blocks(r));
}

ShCoefficients sh_project_from_samples(const std::vector<std::pair<Vec3, Vec3>>& samples) {
    if (samples.size() < 16)
        throw DataError("sh projection needs at least 16 samples, got " +
                        std::to_string(samples.size()));

    double n[16][16] = {};
    double rhs[16][3] = {};
    for (const auto& [dir, rgb] : samples) {
        const std::array<double, 16> b = sh_basis(dir);
        const double y[3] = {rgb.x - 0.5, rgb.y - 0.5, rgb.z - 0.5};
        for (int i = 0; i < 16; ++i) {
            for (int j = i; j < 16; ++j) n[i][j] += b[i] * b[j];
            for (int ch = 0; ch < 3; ++ch) rhs[i][ch] += b[i] * y[ch];
        }
    }
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < i; ++j) n[i][j] = n[j][i];

    double v[16][16];
    jacobi16(n, v);
    double lo = n[0][0], hi = n[0][0];
    for (int k = 1; k < 16; ++k) {
        lo = std::min(lo, n[k][k]);
        hi = std::max(hi, n[k][k]);
    }
    if (!(lo > 0.0) || hi / lo > 1e6)
        throw DataError("sh projection normal equations are ill-conditioned "
                        "(inadequate direction coverage)");

    ShCoefficients out;
    for (int ch = 0; ch < 3; ++ch) {
        for (int k = 0; k < 16; ++k) {
            double proj = 0.0;
            for (int i = 0; i < 16; ++i) proj += v[i][k] * rhs[i][ch];
            proj /= n[k][k];
            for (int i = 0; i < 16; ++i) out.c[i][ch] += v[i][k] * proj;
        }
    }
    return out;
}

void set_wigner_test_corruption(bool enabled) {
    g_corrupt_wigner.store(enabled, std::memory_order_relaxed);
}

} // namespace gausskin
