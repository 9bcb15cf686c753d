#pragma once

#include <span>
#include <vector>

#include "gausskin/math.hpp"

namespace gausskin {

// Unit quaternion in (w, x, y, z) memory order, kept in canonical sign:
// w >= 0, and if w == 0 the first nonzero of (x, y, z) is >= 0. Rotations are
// double-covered, so canonicalizing makes equality tests and frame-to-frame
// warm starts deterministic.
struct UnitQuaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    static UnitQuaternion identity() { return {}; }

    // Normalizes and canonicalizes. Throws DataError on a (near-)zero input.
    static UnitQuaternion normalized(double w, double x, double y, double z);

    // For loading values persisted by this library: keeps the exact stored
    // bits (so save/load round trips are bitwise) unless the norm drifted
    // more than 1e-9 from unit, in which case it renormalizes. Sign is
    // canonicalized either way.
    static UnitQuaternion from_stored(double w, double x, double y, double z);

    // Axis need not be normalized. Angle in radians.
    static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);

    bool is_identity() const { return w == 1.0 && x == 0.0 && y == 0.0 && z == 0.0; }
};

// Proper rotation matrix (row-major). `checked` validates orthogonality
// within 1e-7 and det within 1e-7 of +1; the conversion paths below produce
// valid rotations by construction and skip the check.
struct RotationMatrix {
    Mat3 m = Mat3::identity();

    static RotationMatrix identity() { return {}; }
    static RotationMatrix checked(const Mat3& m);

    Vec3 operator*(const Vec3& v) const { return m * v; }
    RotationMatrix transposed() const { return RotationMatrix{transpose(m)}; }
};

struct RigidTransform {
    RotationMatrix rotation;
    Vec3 translation;

    static RigidTransform identity() { return {}; }

    Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

    // Composition: (a * b)(p) = a(b(p)).
    RigidTransform operator*(const RigidTransform& o) const {
        return {RotationMatrix{rotation.m * o.rotation.m}, rotation * o.translation + translation};
    }

    RigidTransform inverse() const {
        const RotationMatrix rt = rotation.transposed();
        return {rt, -(rt * translation)};
    }
};

// Symmetric 4x4 accumulator for the weighted quaternion-average problem;
// built symmetric by construction.
struct SymMatrix4 {
    double m[4][4] = {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};

    static SymMatrix4 diagonal(double a, double b, double c, double d) {
        SymMatrix4 r;
        r.m[0][0] = a;
        r.m[1][1] = b;
        r.m[2][2] = c;
        r.m[3][3] = d;
        return r;
    }

    void add_scaled_outer(const UnitQuaternion& q, double weight);

    double trace() const { return m[0][0] + m[1][1] + m[2][2] + m[3][3]; }
};

RotationMatrix quat_to_matrix(const UnitQuaternion& q);

// Inverse conversion; validates the input matrix and throws DataError on a
// malformed (non-orthogonal or reflecting) one. Output is canonicalized.
UnitQuaternion matrix_to_quat(const Mat3& m);
inline UnitQuaternion matrix_to_quat(const RotationMatrix& r) { return matrix_to_quat(r.m); }

// Hamilton product a*b; the rotation of a is applied after the rotation of b,
// i.e. quat_to_matrix(quat_compose(a, b)) == quat_to_matrix(a) * quat_to_matrix(b).
UnitQuaternion quat_compose(const UnitQuaternion& a, const UnitQuaternion& b);

// Geodesic distance 2*acos(|<a,b>|) in [0, pi]; blind to quaternion sign.
double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b);

// A = sum_j w_j * b_j b_j^T. Weights must be non-negative with at least one
// positive entry (throws DataError otherwise); trace(A) equals the weight sum.
SymMatrix4 build_average_matrix(std::span<const UnitQuaternion> bones, std::span<const double> weights);

// Dominant eigenvector of a symmetric 4x4 via cyclic Jacobi sweeps (off-
// diagonal norm < 1e-14 or 32 sweeps). On a (near-)repeated dominant
// eigenvalue the tie-break picks the candidate maximizing |w|, then |x|,
// |y|, |z|. Result is canonicalized.
UnitQuaternion max_eigenvector_exact(const SymMatrix4& a);

// `iterations` multiply-normalize steps from `start`, then canonicalize.
// Falls back to the exact solver when the iterate is annihilated (start
// orthogonal to the range of a rank-deficient A).
UnitQuaternion max_eigenvector_power(const SymMatrix4& a, const UnitQuaternion& start, int iterations);

// Rotation nearest to an arbitrary 3x3 matrix in the Frobenius sense (the
// orthogonal polar factor, corrected to det +1 when the input reflects).
// Solved as the Davenport quaternion eigenproblem on the same 4x4 Jacobi
// machinery as the quaternion average. Note that for a weighted blend of
// rotations this coincides exactly with the weighted quaternion average
// (maximizing sum w_i <q, b_i>^2 is maximizing tr(R^T sum w_i R_i)). Throws
// DataError when the input is too close to singular to orient.
UnitQuaternion nearest_rotation(const Mat3& m);

// Quaternion read off a (possibly non-orthogonal) matrix by the standard
// largest-pivot construction, then normalized. On a valid rotation this is
// the exact inverse of quat_to_matrix; on a non-rotation blend it yields the
// inconsistent rotation that naive linear blend skinning pipelines apply,
// which is what makes it the improper baseline (unlike nearest_rotation it
// does not minimize any distance to the blend).
UnitQuaternion quat_from_blend(const Mat3& m);

} // namespace gausskin
