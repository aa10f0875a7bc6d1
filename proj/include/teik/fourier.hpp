// teik - finite Fourier series on the unit 2-torus
#ifndef TEIK_FOURIER_HPP
#define TEIK_FOURIER_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "core.hpp"

namespace teik {

inline constexpr double two_pi = 6.283185307179586476925286766559;

// One term a*cos(2*pi*(m x + n y)) + b*sin(2*pi*(m x + n y)).
// Integer frequencies keep every series Z^2-periodic by construction.
struct FourierTerm {
    int m = 0;
    int n = 0;
    double a = 0.0;
    double b = 0.0;
};

class FourierSeries {
public:
    FourierSeries() = default;
    explicit FourierSeries(std::vector<FourierTerm> terms) : terms_(std::move(terms)) { merge(); }

    static FourierSeries constant(double c) {
        return FourierSeries({FourierTerm{0, 0, c, 0.0}});
    }

    void add_term(int m, int n, double a, double b) {
        terms_.push_back({m, n, a, b});
        merge();
    }

    const std::vector<FourierTerm>& terms() const { return terms_; }
    bool empty() const { return terms_.empty(); }

    double eval(Vec2 p) const {
        double s = 0.0;
        for (const auto& t : terms_) {
            double phase = two_pi * (t.m * p.x + t.n * p.y);
            s += t.a * std::cos(phase) + t.b * std::sin(phase);
        }
        return s;
    }

    // Exact term-by-term derivative: axis 0 -> d/dx, axis 1 -> d/dy.
    // d/dx [a cos + b sin] = 2*pi*m * (b cos - a sin).
    FourierSeries derivative(int axis) const {
        std::vector<FourierTerm> out;
        out.reserve(terms_.size());
        for (const auto& t : terms_) {
            double f = two_pi * (axis == 0 ? t.m : t.n);
            if (f == 0.0) continue;
            out.push_back({t.m, t.n, f * t.b, -f * t.a});
        }
        return FourierSeries(std::move(out));
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& t : terms_) m = std::max({m, std::abs(t.a), std::abs(t.b)});
        return m;
    }

    // Drops terms whose coefficients are below eps (used by built-in families
    // that truncate an analytic coefficient expansion).
    void prune(double eps) {
        terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                    [eps](const FourierTerm& t) {
                                        return std::abs(t.a) < eps && std::abs(t.b) < eps;
                                    }),
                     terms_.end());
    }

private:
    // Canonical form: one term per frequency, (m,n) lexicographic, and the
    // representative chosen with m > 0 or (m == 0 && n >= 0).  cos is even and
    // sin odd, so (-m,-n,a,b) == (m,n,a,-b).
    void merge() {
        std::map<std::pair<int, int>, std::pair<double, double>> acc;
        for (const auto& t : terms_) {
            int m = t.m, n = t.n;
            double a = t.a, b = t.b;
            if (m < 0 || (m == 0 && n < 0)) { m = -m; n = -n; b = -b; }
            auto& slot = acc[{m, n}];
            slot.first += a;
            slot.second += b;
        }
        terms_.clear();
        terms_.reserve(acc.size());
        for (const auto& [freq, ab] : acc)
            terms_.push_back({freq.first, freq.second, ab.first, ab.second});
    }

    std::vector<FourierTerm> terms_;
};

} // namespace teik

#endif
