// teik - small fixed-size algebra and shared error types
#ifndef TEIK_CORE_HPP
#define TEIK_CORE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace teik {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2() = default;
    constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

    constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
    constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
    constexpr Vec2 operator-() const { return {-x, -y}; }
    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

constexpr inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
constexpr inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// z-component of the 3D cross product; positive when b lies to the left of a.
constexpr inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

inline Vec2 normalized(Vec2 v) {
    double n = v.norm();
    return n > 0.0 ? v / n : Vec2{0.0, 0.0};
}

// Euclidean distance from h to the closed ray {s*m : s >= 0}, m a unit vector.
inline double dist_to_ray(Vec2 h, Vec2 m) {
    double along = dot(h, m);
    if (along <= 0.0) return h.norm();
    return std::abs(cross(m, h));
}

// Symmetric 2x2 matrix; used for the metric and its inverse.
struct SymMat2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    double det() const { return xx * yy - xy * xy; }
    Vec2 mul(Vec2 v) const { return {xx * v.x + xy * v.y, xy * v.x + yy * v.y}; }
    double quad(Vec2 v) const { return xx * v.x * v.x + 2.0 * xy * v.x * v.y + yy * v.y * v.y; }
    double bilin(Vec2 u, Vec2 v) const {
        return xx * u.x * v.x + xy * (u.x * v.y + u.y * v.x) + yy * u.y * v.y;
    }
    SymMat2 inverse() const {
        double d = det();
        return {yy / d, -xy / d, xx / d};
    }
};

struct Rect {
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    Vec2 center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
    bool contains(Vec2 p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
    double diag() const { return std::hypot(width(), height()); }
};

//----------------------------------------------------------------------------
// Error hierarchy. Each condition the library can refuse on gets its own type
// so callers (and the CLI exit-code mapping) can tell configuration mistakes
// from numerical failures.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: malformed spec files, violated preconditions, unusable windows.
struct ConfigError : Error { using Error::Error; };
struct SignatureError : ConfigError { using ConfigError::ConfigError; };
struct PreconditionError : ConfigError { using ConfigError::ConfigError; };
struct WindowTooSmall : ConfigError { using ConfigError::ConfigError; };
struct MaskMargin : ConfigError { using ConfigError::ConfigError; };
struct OutOfChart : ConfigError { using ConfigError::ConfigError; };

// Numerical failures: the computation ran but did not meet its contract.
struct NumericalError : Error { using Error::Error; };
struct IntegrationError : NumericalError { using NumericalError::NumericalError; };
struct NoBracket : NumericalError { using NumericalError::NumericalError; };
struct Divergence : NumericalError { using NumericalError::NumericalError; };
struct OrientationError : NumericalError { using NumericalError::NumericalError; };
struct NotClosing : NumericalError { using NumericalError::NumericalError; };
struct DirectionDrift : NumericalError { using NumericalError::NumericalError; };
struct ConditionStarViolation : NumericalError { using NumericalError::NumericalError; };
struct NoConvergence : NumericalError { using NumericalError::NumericalError; };
struct EmptyWindow : NumericalError { using NumericalError::NumericalError; };

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw PreconditionError(msg);
}

} // namespace teik

#endif
