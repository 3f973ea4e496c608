#ifndef FLOWLAB_DISTRIBUTIONS_HPP
#define FLOWLAB_DISTRIBUTIONS_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <variant>

#include <boost/math/special_functions/gamma.hpp>

#include "flowlab/errors.hpp"

namespace flowlab {

namespace math {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// log(1 - exp(d)) for d <= 0.
inline double log1mexp(double d) {
    if (d == -inf) return 0.0;
    if (d >= 0.0) return -inf;
    return d > -std::numbers::ln2 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d));
}

/// Standard normal density.
inline double npdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// log of the standard normal CDF, accurate far into both tails.
inline double log_ndtr(double z) {
    if (z == -inf) return -inf;
    if (z > 0.0) return std::log1p(-0.5 * std::erfc(z / std::numbers::sqrt2));
    if (z > -37.0) return std::log(0.5 * std::erfc(-z / std::numbers::sqrt2));
    // asymptotic expansion of the Mills ratio
    double z2 = 1.0 / (z * z);
    double s = 1.0 - z2 * (1.0 - 3.0 * z2 * (1.0 - 5.0 * z2 * (1.0 - 7.0 * z2)));
    return -0.5 * z * z - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(s);
}

inline double ndtr(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

} // namespace math

// ---------------------------------------------------------------------------
// Component kinds. Each exposes pdf/cdf/sf plus log-space tails.
// ---------------------------------------------------------------------------

/// Uniform on (lo, hi]. With integer bounds it places mass 1/(hi-lo) on each
/// integer in (lo, hi] once samples are mapped by floor(x) + 1.
struct Uniform {
    double lo = 0, hi = 1;

    void validate() const {
        if (!(lo >= 0 && hi > lo && std::isfinite(hi))) throw ValidationError("uniform needs 0 <= lo < hi");
    }
    double pdf(double x) const { return x > lo && x <= hi ? 1.0 / (hi - lo) : 0.0; }
    double cdf(double x) const { return x <= lo ? 0.0 : x >= hi ? 1.0 : (x - lo) / (hi - lo); }
    double sf(double x) const { return 1.0 - cdf(x); }
    double log_cdf(double x) const { return std::log(cdf(x)); }
    double log_sf(double x) const { return x <= lo ? 0.0 : x >= hi ? -math::inf : std::log((hi - x) / (hi - lo)); }
    template <class Rng>
    double sample(Rng& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        return hi - (hi - lo) * u;
    }
};

struct LogNormal {
    double mu = 0, sigma = 1;

    void validate() const {
        if (!(std::isfinite(mu) && sigma > 0 && std::isfinite(sigma))) throw ValidationError("lognormal needs sigma > 0");
    }
    double z(double x) const { return (std::log(x) - mu) / sigma; }
    double pdf(double x) const {
        if (x <= 0) return 0.0;
        return math::npdf(z(x)) / (x * sigma);
    }
    double cdf(double x) const { return x <= 0 ? 0.0 : math::ndtr(z(x)); }
    double sf(double x) const { return x <= 0 ? 1.0 : math::ndtr(-z(x)); }
    double log_cdf(double x) const { return x <= 0 ? -math::inf : math::log_ndtr(z(x)); }
    double log_sf(double x) const { return x <= 0 ? 0.0 : math::log_ndtr(-z(x)); }
    template <class Rng>
    double sample(Rng& rng) const {
        return std::lognormal_distribution<double>(mu, sigma)(rng);
    }
};

struct Normal {
    double mu = 0, sigma = 1;

    void validate() const {
        if (!(std::isfinite(mu) && sigma > 0 && std::isfinite(sigma))) throw ValidationError("normal needs sigma > 0");
    }
    double pdf(double x) const { return math::npdf((x - mu) / sigma) / sigma; }
    double cdf(double x) const { return math::ndtr((x - mu) / sigma); }
    double sf(double x) const { return math::ndtr((mu - x) / sigma); }
    double log_cdf(double x) const { return math::log_ndtr((x - mu) / sigma); }
    double log_sf(double x) const { return math::log_ndtr((mu - x) / sigma); }
    template <class Rng>
    double sample(Rng& rng) const {
        return std::normal_distribution<double>(mu, sigma)(rng);
    }
};

/// Pareto type I with shape alpha and scale (lower bound) xm.
struct Pareto {
    double alpha = 1, xm = 1;

    void validate() const {
        if (!(alpha > 0 && xm > 0 && std::isfinite(alpha) && std::isfinite(xm)))
            throw ValidationError("pareto needs alpha > 0 and xm > 0");
    }
    double pdf(double x) const { return x < xm ? 0.0 : alpha / xm * std::pow(xm / x, alpha + 1); }
    double log_sf(double x) const { return x <= xm ? 0.0 : alpha * std::log(xm / x); }
    double log_cdf(double x) const { return x <= xm ? -math::inf : math::log1mexp(log_sf(x)); }
    double cdf(double x) const { return x <= xm ? 0.0 : -std::expm1(log_sf(x)); }
    double sf(double x) const { return std::exp(log_sf(x)); }
    template <class Rng>
    double sample(Rng& rng) const {
        double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        return xm * std::pow(1.0 - u, -1.0 / alpha);
    }
};

struct Weibull {
    double k = 1, lambda = 1;

    void validate() const {
        if (!(k > 0 && lambda > 0 && std::isfinite(k) && std::isfinite(lambda)))
            throw ValidationError("weibull needs k > 0 and lambda > 0");
    }
    double pdf(double x) const {
        if (x < 0) return 0.0;
        if (x == 0) return k < 1 ? math::inf : (k == 1 ? 1.0 / lambda : 0.0);
        double t = x / lambda;
        return k / lambda * std::pow(t, k - 1) * std::exp(-std::pow(t, k));
    }
    double log_sf(double x) const { return x <= 0 ? 0.0 : -std::pow(x / lambda, k); }
    double log_cdf(double x) const { return x <= 0 ? -math::inf : math::log1mexp(log_sf(x)); }
    double cdf(double x) const { return x <= 0 ? 0.0 : -std::expm1(log_sf(x)); }
    double sf(double x) const { return std::exp(log_sf(x)); }
    template <class Rng>
    double sample(Rng& rng) const {
        return std::weibull_distribution<double>(k, lambda)(rng);
    }
};

struct Gamma {
    double k = 1, theta = 1;

    void validate() const {
        if (!(k > 0 && theta > 0 && std::isfinite(k) && std::isfinite(theta)))
            throw ValidationError("gamma needs k > 0 and theta > 0");
    }
    double pdf(double x) const {
        if (x <= 0) return 0.0;
        return boost::math::gamma_p_derivative(k, x / theta) / theta;
    }
    double cdf(double x) const { return x <= 0 ? 0.0 : boost::math::gamma_p(k, x / theta); }
    double sf(double x) const { return x <= 0 ? 1.0 : boost::math::gamma_q(k, x / theta); }
    double log_cdf(double x) const { return std::log(cdf(x)); }
    double log_sf(double x) const { return std::log(sf(x)); }
    template <class Rng>
    double sample(Rng& rng) const {
        return std::gamma_distribution<double>(k, theta)(rng);
    }
};

using Component = std::variant<Uniform, LogNormal, Normal, Pareto, Weibull, Gamma>;

enum class ComponentKind { uniform, lognormal, normal, pareto, weibull, gamma };

inline ComponentKind kind_of(const Component& c) { return static_cast<ComponentKind>(c.index()); }

inline std::string_view kind_name(ComponentKind k) {
    switch (k) {
    case ComponentKind::uniform: return "uniform";
    case ComponentKind::lognormal: return "lognormal";
    case ComponentKind::normal: return "normal";
    case ComponentKind::pareto: return "pareto";
    case ComponentKind::weibull: return "weibull";
    case ComponentKind::gamma: return "gamma";
    }
    return "?";
}

inline void validate(const Component& c) {
    std::visit([](const auto& d) { d.validate(); }, c);
}
inline double pdf(const Component& c, double x) {
    return std::visit([x](const auto& d) { return d.pdf(x); }, c);
}
inline double cdf(const Component& c, double x) {
    return std::visit([x](const auto& d) { return d.cdf(x); }, c);
}
inline double sf(const Component& c, double x) {
    return std::visit([x](const auto& d) { return d.sf(x); }, c);
}
template <class Rng>
double sample(const Component& c, Rng& rng) {
    return std::visit([&rng](const auto& d) { return d.sample(rng); }, c);
}

/// log P(lo < X <= hi), computed from whichever tail avoids cancellation.
inline double log_interval_mass(const Component& c, double lo, double hi) {
    if (!(hi > lo)) return -math::inf;
    return std::visit(
        [lo, hi](const auto& d) {
            constexpr double log_half = -std::numbers::ln2;
            double lc_hi = d.log_cdf(hi);
            if (lc_hi == -math::inf) return -math::inf;
            if (lc_hi < log_half) return lc_hi + math::log1mexp(d.log_cdf(lo) - lc_hi);
            double ls_lo = d.log_sf(lo);
            if (ls_lo == -math::inf) return -math::inf;
            if (ls_lo < log_half) return ls_lo + math::log1mexp(d.log_sf(hi) - ls_lo);
            double m = d.cdf(hi) - d.cdf(lo);
            return m > 0 ? std::log(m) : -math::inf;
        },
        c);
}

} // namespace flowlab

#endif // FLOWLAB_DISTRIBUTIONS_HPP
