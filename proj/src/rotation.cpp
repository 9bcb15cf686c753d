#include "gausskin/rotation.hpp"

#include <algorithm>
#include <cmath>

#include "gausskin/errors.hpp"

namespace gausskin {

namespace {

UnitQuaternion canonicalize(double w, double x, double y, double z) {
    bool flip;
    if (w != 0.0) {
        flip = w < 0.0;
    } else if (x != 0.0) {
        flip = x < 0.0;
    } else if (y != 0.0) {
        flip = y < 0.0;
    } else {
        flip = z < 0.0;
    }
    if (flip) return {-w, -x, -y, -z};
    return {w, x, y, z};
}

struct Eigen4 {
    double values[4];     // unordered
    double vectors[4][4]; // column k is the eigenvector of values[k]
};

// Cyclic Jacobi on a symmetric 4x4: unconditionally stable and exact to
// machine precision at this size, no external dependency needed.
Eigen4 jacobi_eigen(const SymMatrix4& in) {
    double a[4][4];
    double frob = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            a[i][j] = in.m[i][j];
            frob += a[i][j] * a[i][j];
        }
    frob = std::sqrt(frob);
    const double tol = 1e-14 * std::max(1.0, frob);

    double v[4][4] = {{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}};
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += 2.0 * a[p][q] * a[p][q];
        if (std::sqrt(off) < tol) break;

        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (int k = 0; k < 4; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 4; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = a[q][p] = 0.0; // rotation zeroes this pair by construction
                for (int k = 0; k < 4; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    Eigen4 out;
    for (int k = 0; k < 4; ++k) {
        out.values[k] = a[k][k];
        for (int i = 0; i < 4; ++i) out.vectors[i][k] = v[i][k];
    }
    return out;
}

// Dominant eigenvector with the deterministic tie-break on near-repeated
// dominant eigenvalues: maximize |w|, then |x|, |y|, |z|.
UnitQuaternion dominant_from(const Eigen4& e) {
    double lambda_max = e.values[0];
    for (int k = 1; k < 4; ++k) lambda_max = std::max(lambda_max, e.values[k]);
    const double tie_tol = 1e-12 * std::max(1.0, std::abs(lambda_max));

    int best = -1;
    double best_abs[4] = {-1, -1, -1, -1};
    for (int k = 0; k < 4; ++k) {
        if (e.values[k] < lambda_max - tie_tol) continue;
        double cand[4];
        for (int i = 0; i < 4; ++i) cand[i] = std::abs(e.vectors[i][k]);
        if (best < 0 || std::lexicographical_compare(best_abs, best_abs + 4, cand, cand + 4)) {
            best = k;
            for (int i = 0; i < 4; ++i) best_abs[i] = cand[i];
        }
    }
    return UnitQuaternion::normalized(e.vectors[0][best], e.vectors[1][best],
                                      e.vectors[2][best], e.vectors[3][best]);
}

} // namespace

UnitQuaternion UnitQuaternion::normalized(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!(n > 1e-150) || !std::isfinite(n))
        throw DataError("cannot normalize a zero or non-finite quaternion");
    return canonicalize(w / n, x / n, y / n, z / n);
}

UnitQuaternion UnitQuaternion::from_stored(double w, double x, double y, double z) {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    if (!std::isfinite(n) || std::abs(n - 1.0) > 1e-9) return normalized(w, x, y, z);
    return canonicalize(w, x, y, z);
}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = gausskin::normalized(axis);
    const double h = 0.5 * angle;
    const double s = std::sin(h);
    return normalized(std::cos(h), u.x * s, u.y * s, u.z * s);
}

RotationMatrix RotationMatrix::checked(const Mat3& m) {
    const Mat3 mtm = transpose(m) * m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const double expected = i == j ? 1.0 : 0.0;
            if (std::abs(mtm.m[i][j] - expected) > 1e-7)
                throw DataError("matrix is not orthogonal within 1e-7");
        }
    if (std::abs(det(m) - 1.0) > 1e-7)
        throw DataError("matrix determinant is not +1 within 1e-7");
    return RotationMatrix{m};
}

void SymMatrix4::add_scaled_outer(const UnitQuaternion& q, double weight) {
    const double b[4] = {q.w, q.x, q.y, q.z};
    // One rounding per pair keeps the matrix bitwise symmetric even under
    // FMA contraction.
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) {
            const double v = weight * b[i] * b[j];
            m[i][j] += v;
            if (i != j) m[j][i] = m[i][j];
        }
}

RotationMatrix quat_to_matrix(const UnitQuaternion& q) {
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 m;
    m.m[0][0] = 1.0 - 2.0 * (y * y + z * z);
    m.m[0][1] = 2.0 * (x * y - w * z);
    m.m[0][2] = 2.0 * (x * z + w * y);
    m.m[1][0] = 2.0 * (x * y + w * z);
    m.m[1][1] = 1.0 - 2.0 * (x * x + z * z);
    m.m[1][2] = 2.0 * (y * z - w * x);
    m.m[2][0] = 2.0 * (x * z - w * y);
    m.m[2][1] = 2.0 * (y * z + w * x);
    m.m[2][2] = 1.0 - 2.0 * (x * x + y * y);
    return RotationMatrix{m};
}

UnitQuaternion matrix_to_quat(const Mat3& m) {
    RotationMatrix::checked(m); // rejects malformed input transforms
    return quat_from_blend(m);
}

UnitQuaternion quat_from_blend(const Mat3& m) {
    double w, x, y, z;
    const double trace = m.m[0][0] + m.m[1][1] + m.m[2][2];
    if (trace > 0.0) {
        const double s = 2.0 * std::sqrt(trace + 1.0);
        w = 0.25 * s;
        x = (m.m[2][1] - m.m[1][2]) / s;
        y = (m.m[0][2] - m.m[2][0]) / s;
        z = (m.m[1][0] - m.m[0][1]) / s;
    } else if (m.m[0][0] > m.m[1][1] && m.m[0][0] > m.m[2][2]) {
        const double s = 2.0 * std::sqrt(1.0 + m.m[0][0] - m.m[1][1] - m.m[2][2]);
        w = (m.m[2][1] - m.m[1][2]) / s;
        x = 0.25 * s;
        y = (m.m[0][1] + m.m[1][0]) / s;
        z = (m.m[0][2] + m.m[2][0]) / s;
    } else if (m.m[1][1] > m.m[2][2]) {
        const double s = 2.0 * std::sqrt(1.0 + m.m[1][1] - m.m[0][0] - m.m[2][2]);
        w = (m.m[0][2] - m.m[2][0]) / s;
        x = (m.m[0][1] + m.m[1][0]) / s;
        y = 0.25 * s;
        z = (m.m[1][2] + m.m[2][1]) / s;
    } else {
        const double s = 2.0 * std::sqrt(1.0 + m.m[2][2] - m.m[0][0] - m.m[1][1]);
        w = (m.m[1][0] - m.m[0][1]) / s;
        x = (m.m[0][2] + m.m[2][0]) / s;
        y = (m.m[1][2] + m.m[2][1]) / s;
        z = 0.25 * s;
    }
    return UnitQuaternion::normalized(w, x, y, z);
}

UnitQuaternion quat_compose(const UnitQuaternion& a, const UnitQuaternion& b) {
    if (a.is_identity()) return b;
    if (b.is_identity()) return a;
    return UnitQuaternion::normalized(
        a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
        a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
        a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
        a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w);
}

double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
    // Equivalent to 2*acos(|<a,b>|) but well conditioned near zero distance
    // (exact 0 for identical inputs).
    const double dot = a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
    const double s = dot < 0.0 ? -1.0 : 1.0;
    const double dw = a.w - s * b.w, dx = a.x - s * b.x, dy = a.y - s * b.y, dz = a.z - s * b.z;
    const double pw = a.w + s * b.w, px = a.x + s * b.x, py = a.y + s * b.y, pz = a.z + s * b.z;
    const double dn = std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
    const double pn = std::sqrt(pw * pw + px * px + py * py + pz * pz);
    return 4.0 * std::atan2(dn, pn);
}

SymMatrix4 build_average_matrix(std::span<const UnitQuaternion> bones, std::span<const double> weights) {
    if (bones.size() != weights.size())
        throw DataError("bone and weight lists differ in length");
    SymMatrix4 a;
    double total = 0.0;
    for (std::size_t j = 0; j < bones.size(); ++j) {
        if (weights[j] < 0.0) throw DataError("negative skinning weight");
        if (weights[j] == 0.0) continue;
        a.add_scaled_outer(bones[j], weights[j]);
        total += weights[j];
    }
    if (total <= 0.0) throw DataError("all skinning weights are zero (degenerate binding)");
    return a;
}

UnitQuaternion max_eigenvector_exact(const SymMatrix4& a) {
    return dominant_from(jacobi_eigen(a));
}

UnitQuaternion max_eigenvector_power(const SymMatrix4& a, const UnitQuaternion& start, int iterations) {
    if (iterations < 1) throw DataError("power iteration requires iterations >= 1");
    double v[4] = {start.w, start.x, start.y, start.z};
    for (int it = 0; it < iterations; ++it) {
        double u[4];
        for (int i = 0; i < 4; ++i)
            u[i] = a.m[i][0] * v[0] + a.m[i][1] * v[1] + a.m[i][2] * v[2] + a.m[i][3] * v[3];
        const double n = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[3] * u[3]);
        if (!(n > 1e-150)) {
            // Start was orthogonal to the range of a rank-deficient A; the
            // iteration carries no direction. Defer to the exact tie-break.
            return max_eigenvector_exact(a);
        }
        for (int i = 0; i < 4; ++i) v[i] = u[i] / n;
    }
    return UnitQuaternion::normalized(v[0], v[1], v[2], v[3]);
}

UnitQuaternion nearest_rotation(const Mat3& m) {
    // Davenport form of the orthogonal Procrustes problem: the quaternion of
    // the rotation maximizing tr(R^T M) is the dominant eigenvector of K.
    // Unlike a plain polar factor this stays a proper rotation when det(M) < 0.
    SymMatrix4 k;
    k.m[0][0] = m.m[0][0] + m.m[1][1] + m.m[2][2];
    k.m[1][1] = m.m[0][0] - m.m[1][1] - m.m[2][2];
    k.m[2][2] = -m.m[0][0] + m.m[1][1] - m.m[2][2];
    k.m[3][3] = -m.m[0][0] - m.m[1][1] + m.m[2][2];
    k.m[0][1] = k.m[1][0] = m.m[2][1] - m.m[1][2];
    k.m[0][2] = k.m[2][0] = m.m[0][2] - m.m[2][0];
    k.m[0][3] = k.m[3][0] = m.m[1][0] - m.m[0][1];
    k.m[1][2] = k.m[2][1] = m.m[0][1] + m.m[1][0];
    k.m[1][3] = k.m[3][1] = m.m[0][2] + m.m[2][0];
    k.m[2][3] = k.m[3][2] = m.m[1][2] + m.m[2][1];

    const Eigen4 e = jacobi_eigen(k);
    double lambda_max = e.values[0];
    for (int i = 1; i < 4; ++i) lambda_max = std::max(lambda_max, e.values[i]);

    double frob = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) frob += m.m[i][j] * m.m[i][j];
    if (lambda_max <= 1e-12 * std::max(1.0, std::sqrt(frob)))
        throw DataError("blended rotation block is singular");

    return dominant_from(e);
}

} // namespace gausskin
