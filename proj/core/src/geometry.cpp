#include "emogait/geometry.hpp"

#include "emogait/errors.hpp"

namespace emogait {

Versor shortest_arc(const Vec3& from, const Vec3& to) {
    double nf = norm(from);
    double nt = norm(to);
    if (nf < 1e-12 || nt < 1e-12) {
        throw DegeneratePoseError("shortest_arc: zero-length direction");
    }
    Vec3 u = scaled(from, 1.0 / nf);
    Vec3 v = scaled(to, 1.0 / nt);
    double d = dot(u, v);
    if (d < -1.0 + 1e-8) {
        // Antiparallel: rotate pi about a fixed orthogonal axis.
        Vec3 axis = cross(Vec3{0.0, 1.0, 0.0}, u);
        if (norm(axis) < 1e-9) axis = cross(Vec3{1.0, 0.0, 0.0}, u);
        axis = normalized(axis);
        return {0.0, axis.x, axis.y, axis.z};
    }
    Vec3 c = cross(u, v);
    Versor q{1.0 + d, c.x, c.y, c.z};
    return quat_normalized(q);
}

namespace {

// Largest-eigenvalue eigenvector of a symmetric 4x4 via cyclic Jacobi sweeps.
void jacobi_eigen4(double a[4][4], double vecs[4][4], double vals[4]) {
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) vecs[i][j] = (i == j) ? 1.0 : 0.0;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < 4; ++p)
            for (int q = p + 1; q < 4; ++q) off += a[p][q] * a[p][q];
        if (off < 1e-30) break;
        for (int p = 0; p < 4; ++p) {
            for (int q = p + 1; q < 4; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < 4; ++k) {
                    double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < 4; ++k) {
                    double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < 4; ++k) {
                    double vkp = vecs[k][p], vkq = vecs[k][q];
                    vecs[k][p] = c * vkp - s * vkq;
                    vecs[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    for (int i = 0; i < 4; ++i) vals[i] = a[i][i];
}

} // namespace

Versor best_fit_rotation(std::span<const std::pair<Vec3, Vec3>> pairs) {
    if (pairs.empty()) return versor_identity();
    // Davenport q-method: maximize q^T K q over unit quaternions.
    double b[3][3] = {};
    for (const auto& [from, to] : pairs) {
        const double f[3] = {from.x, from.y, from.z};
        const double t[3] = {to.x, to.y, to.z};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b[i][j] += t[i] * f[j];
    }
    double tr = b[0][0] + b[1][1] + b[2][2];
    double z[3] = {b[1][2] - b[2][1], b[2][0] - b[0][2], b[0][1] - b[1][0]};
    // K acts on (w, x, y, z): K = [[tr, -z^T], [-z, B + B^T - tr I]].
    double k[4][4];
    k[0][0] = tr;
    for (int i = 0; i < 3; ++i) {
        k[0][i + 1] = -z[i];
        k[i + 1][0] = -z[i];
        for (int j = 0; j < 3; ++j) {
            k[i + 1][j + 1] = b[i][j] + b[j][i] - (i == j ? tr : 0.0);
        }
    }
    double vecs[4][4], vals[4];
    jacobi_eigen4(k, vecs, vals);
    int best = 0;
    for (int i = 1; i < 4; ++i)
        if (vals[i] > vals[best]) best = i;
    Versor q{vecs[0][best], vecs[1][best], vecs[2][best], vecs[3][best]};
    if (q.w < 0.0) q = {-q.w, -q.x, -q.y, -q.z};
    return quat_normalized(q);
}

} // namespace emogait
