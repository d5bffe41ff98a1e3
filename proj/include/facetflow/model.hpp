#pragma once

// Pointwise model algebra: regularized flux coefficients, the convex face
// energy density, the anisotropic mobility tensor and its factorization,
// and the regularized subgradient selection for the 1-Laplacian part.

#include <cmath>
#include <stdexcept>
#include <string>

namespace facetflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }

// Symmetric storage is not enforced here; the operators that require
// symmetry assert it where they consume the tensor.
struct Mat2 {
    double a11 = 0.0, a12 = 0.0;
    double a21 = 0.0, a22 = 0.0;

    Vec2 apply(Vec2 v) const {
        return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y};
    }
    static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
};

inline Mat2 operator*(const Mat2& a, const Mat2& b) {
    return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
            a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}

inline Mat2 transpose(const Mat2& a) { return {a.a11, a.a21, a.a12, a.a22}; }

// p:     growth exponent of the surface energy, p > 1.  The analysis mode
//        is 1 < p <= 2; p > 2 is accepted only behind allow_p_above_2.
// beta:  weight of the total-variation part, beta >= 0.
// q:     slope dependence of the mobility, q >= 0.
// a:     zeroth-order coupling; equals 1/delta in evolution mode.
// tau:   regularization strength, 0 < tau <= 1.
// delta: backward-Euler step, delta > 0 (only used by evolve).
struct ModelParams {
    double p = 1.5;
    double beta = 1.0;
    double q = 1.0;
    double a = 1.0;
    double tau = 1.0;
    double delta = 1.0;
    bool allow_p_above_2 = false;

    void validate() const {
        if (!(p > 1.0))
            throw std::invalid_argument("model: requires p > 1, got p = " + std::to_string(p));
        if (p > 2.0 && !allow_p_above_2)
            throw std::invalid_argument(
                "model: requires p <= 2 unless allow_p_above_2 is set, got p = " + std::to_string(p));
        if (!(beta >= 0.0))
            throw std::invalid_argument("model: requires beta >= 0");
        if (!(q >= 0.0))
            throw std::invalid_argument("model: requires q >= 0");
        if (!(a >= 0.0))
            throw std::invalid_argument("model: requires a >= 0");
        if (!(tau > 0.0 && tau <= 1.0))
            throw std::invalid_argument("model: requires 0 < tau <= 1, got tau = " + std::to_string(tau));
        if (!(delta > 0.0))
            throw std::invalid_argument("model: requires delta > 0");
    }
};

// rho(s) = s^((p-2)/2) + beta * s^(-1/2), the unregularized coefficient of
// the combined flux written against the squared gradient s = |grad u|^2.
// Singular at s = 0 whenever beta > 0 or p < 2.
inline double rho(double s, const ModelParams& m) {
    if (s < 0.0) throw std::invalid_argument("rho: s must be >= 0");
    if (s == 0.0 && (m.beta > 0.0 || m.p < 2.0))
        throw std::domain_error("rho: singular at s = 0");
    double v = std::pow(s, 0.5 * (m.p - 2.0));
    if (m.beta > 0.0) v += m.beta / std::sqrt(s);
    return v;
}

// rho_tau(s) = (s+tau)^((p-2)/2) + beta * (s+tau)^(-1/2); finite and strictly
// positive for every s >= 0 because tau > 0.
inline double rho_tau(double s, const ModelParams& m) {
    if (s < 0.0) throw std::invalid_argument("rho_tau: s must be >= 0");
    double st = s + m.tau;
    return std::pow(st, 0.5 * (m.p - 2.0)) + m.beta / std::sqrt(st);
}

inline double rho_tau_prime(double s, const ModelParams& m) {
    double st = s + m.tau;
    return 0.5 * (m.p - 2.0) * std::pow(st, 0.5 * (m.p - 4.0))
         - 0.5 * m.beta * std::pow(st, -1.5);
}

// psi_tau written against s = |xi|^2.  psi_tau_sq is increasing in s, and
// xi -> psi_tau_sq(|xi|^2) is convex; its gradient is rho_tau(|xi|^2) xi.
inline double psi_tau_sq(double s, const ModelParams& m) {
    double st = s + m.tau;
    return std::pow(st, 0.5 * m.p) / m.p + m.beta * std::sqrt(st);
}

inline double psi_tau(Vec2 xi, const ModelParams& m) { return psi_tau_sq(xi.norm2(), m); }

inline Vec2 grad_psi_tau(Vec2 xi, const ModelParams& m) { return rho_tau(xi.norm2(), m) * xi; }

// Mobility D = S Lambda S^T with S the rotation aligning e1 with grad u and
// Lambda = diag(1/(1+q|grad u|), 1).  Entry form; D = I at grad u = 0.
inline Mat2 mobility_D(Vec2 xi, double q) {
    double s = xi.norm2();
    if (s == 0.0) return Mat2::identity();
    double g = std::sqrt(s);
    double r = 1.0 / (1.0 + q * g) - 1.0;
    return {1.0 + r * xi.x * xi.x / s, r * xi.x * xi.y / s,
            r * xi.x * xi.y / s, 1.0 + r * xi.y * xi.y / s};
}

// Regularized mobility: denominators padded by tau and (1+tau) on the
// diagonal.  Quadratic form >= (1/(1+q|xi|) + tau) |.|^2; every entry has
// magnitude <= 2 for tau <= 1.
inline Mat2 mobility_D_tau(Vec2 xi, double q, double tau) {
    double s = xi.norm2();
    double g = std::sqrt(s);
    double r = 1.0 / (1.0 + q * g) - 1.0;
    double d = s + tau;
    return {1.0 + tau + r * xi.x * xi.x / d, r * xi.x * xi.y / d,
            r * xi.x * xi.y / d, 1.0 + tau + r * xi.y * xi.y / d};
}

// Rotation / eigenvalue factorization of the unregularized mobility.
// Requires xi != 0; columns of S are xi/|xi| and its left-normal.
inline std::pair<Mat2, Mat2> s_lambda_factor(Vec2 xi, double q) {
    double g = xi.norm();
    if (g == 0.0) throw std::domain_error("s_lambda_factor: undefined at xi = 0");
    Mat2 S{xi.x / g, -xi.y / g, xi.y / g, xi.x / g};
    Mat2 L{1.0 / (1.0 + q * g), 0.0, 0.0, 1.0};
    return {S, L};
}

// Regularized selection out of the subdifferential of |.|: always strictly
// inside the unit disc for tau > 0, and -> xi/|xi| as tau -> 0 off facets.
inline Vec2 subgradient_select(Vec2 xi, double tau) {
    if (!(tau > 0.0)) throw std::invalid_argument("subgradient_select: requires tau > 0");
    return (1.0 / std::sqrt(xi.norm2() + tau)) * xi;
}

// Membership test against the subdifferential of |.| at xi: off the facet
// h must align with xi/|xi|; on the facet (|xi| <= tol) any |h| <= 1 works.
inline bool in_subgradient(Vec2 h, Vec2 xi, double tol = 1e-8) {
    double g = xi.norm();
    if (g > tol) {
        Vec2 d = h - (1.0 / g) * xi;
        return d.norm() <= tol;
    }
    return h.norm() <= 1.0 + tol;
}

}  // namespace facetflow
