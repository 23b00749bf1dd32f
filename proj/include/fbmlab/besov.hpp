#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fbmlab/fft.hpp"

namespace fbmlab {

// ---------------------------------------------------------------------------
// Windowed Besov numerics: periodic grid fields, a fixed smooth dyadic
// partition of unity, Littlewood-Paley blocks via FFT, discrete Besov norms,
// the Gaussian (heat) semigroup, and drift descriptions that keep closed
// forms closed (dirac -> gaussian under smoothing) instead of rasterizing
// eagerly. All norms are window/grid-dependent estimators; callers should
// report the window next to any norm value.
// ---------------------------------------------------------------------------

inline constexpr double besov_inf = std::numeric_limits<double>::infinity();

struct BesovParams {
    double s = 0.0;  // regularity index
    double p = 2.0;  // integrability exponent, may be infinity
    double q = besov_inf;  // block summability, may be infinity

    BesovParams() = default;
    BesovParams(double s_, double p_, double q_ = besov_inf) : s(s_), p(p_), q(q_) {
        if (!(p >= 1.0)) throw std::invalid_argument("BesovParams: p must be >= 1 or infinite");
        if (!(q >= 1.0)) throw std::invalid_argument("BesovParams: q must be >= 1 or infinite");
    }
};

/// Real field sampled at m uniformly spaced points of [x_min, x_max), treated
/// as periodic for FFT purposes. Point j sits at x_min + j * dx.
struct GridField {
    double x_min = 0.0;
    double x_max = 1.0;
    int m_points = 0;
    std::vector<double> values;

    GridField() = default;
    GridField(double xmin, double xmax, int m)
        : x_min(xmin), x_max(xmax), m_points(m), values(static_cast<std::size_t>(m), 0.0) {
        validate();
    }
    GridField(double xmin, double xmax, std::vector<double> vals)
        : x_min(xmin), x_max(xmax), m_points(static_cast<int>(vals.size())), values(std::move(vals)) {
        validate();
    }

    void validate() const {
        if (!(x_max > x_min)) throw std::invalid_argument("GridField: empty window");
        if (m_points < 2 || (m_points & (m_points - 1)) != 0)
            throw std::invalid_argument("GridField: m_points must be a power of two >= 2");
        if (values.size() != static_cast<std::size_t>(m_points))
            throw std::invalid_argument("GridField: value count mismatch");
        for (double v : values)
            if (!std::isfinite(v)) throw std::invalid_argument("GridField: non-finite value");
    }

    double dx() const { return (x_max - x_min) / m_points; }
    double length() const { return x_max - x_min; }
    double x(int j) const { return x_min + j * dx(); }

    /// Linear interpolation inside the window, 0 outside (non-periodic view).
    double interpolate(double xq) const {
        const double h = dx();
        const double u = (xq - x_min) / h;
        if (u < 0.0 || u > m_points - 1) return 0.0;
        const int j = std::min(static_cast<int>(u), m_points - 2);
        const double w = u - j;
        return (1.0 - w) * values[static_cast<std::size_t>(j)] +
               w * values[static_cast<std::size_t>(j + 1)];
    }
};

/// Discrete L^p norm of a field (Riemann sum weights; p = infinity -> max).
inline double lp_norm(const GridField& f, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : f.values) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1 or infinite");
    const double h = f.dx();
    if (p == 1.0) {
        double acc = 0.0;
        for (double v : f.values) acc += std::abs(v);
        return acc * h;
    }
    if (p == 2.0) {
        double acc = 0.0;
        for (double v : f.values) acc += v * v;
        return std::sqrt(acc * h);
    }
    double acc = 0.0;
    for (double v : f.values) acc += std::pow(std::abs(v), p);
    return std::pow(acc * h, 1.0 / p);
}

// ---------------------------------------------------------------------------
// Drift descriptions
// ---------------------------------------------------------------------------

enum class DriftKind { dirac, gaussian, power_cusp, smooth, gridded };

inline const char* to_string(DriftKind k) {
    switch (k) {
        case DriftKind::dirac: return "dirac";
        case DriftKind::gaussian: return "gaussian";
        case DriftKind::power_cusp: return "power_cusp";
        case DriftKind::smooth: return "smooth";
        case DriftKind::gridded: return "gridded";
    }
    return "?";
}

/// Heat kernel g_t(x) = (2 pi t)^{-1/2} exp(-x^2 / (2 t)).
inline double heat_kernel(double t, double x) {
    return std::exp(-x * x / (2.0 * t)) / std::sqrt(2.0 * M_PI * t);
}

/// A drift b together with its declared Besov regularity. Closed-form
/// variants (dirac, gaussian, power cusp) keep their parameters so that
/// smoothing and mass stay exact; `smooth` wraps a callable; `gridded`
/// carries sampled values on a window.
struct DriftSpec {
    DriftKind kind = DriftKind::smooth;
    double mass = 0.0;      // dirac, gaussian
    double width = 0.0;     // gaussian: variance of the kernel (heat time)
    double exponent = 0.0;  // power_cusp: theta in (-1, 0)
    double cutoff = 0.0;    // power_cusp: support radius
    std::function<double(double)> fn;  // smooth
    GridField field;                   // gridded
    BesovParams besov_meta{0.0, 1.0, besov_inf};

    static DriftSpec dirac(double mass_) {
        DriftSpec d;
        d.kind = DriftKind::dirac;
        d.mass = mass_;
        d.besov_meta = BesovParams(0.0, 1.0);  // finite measures sit at (0, 1)
        return d;
    }
    static DriftSpec gaussian(double mass_, double width_) {
        if (!(width_ > 0.0)) throw std::invalid_argument("DriftSpec::gaussian: width must be > 0");
        DriftSpec d;
        d.kind = DriftKind::gaussian;
        d.mass = mass_;
        d.width = width_;
        d.besov_meta = BesovParams(1.0, 1.0);
        return d;
    }
    static DriftSpec power_cusp(double theta, double radius) {
        if (!(theta > -1.0 && theta < 0.0))
            throw std::invalid_argument("DriftSpec::power_cusp: exponent must lie in (-1, 0)");
        if (!(radius > 0.0))
            throw std::invalid_argument("DriftSpec::power_cusp: cutoff radius must be > 0");
        DriftSpec d;
        d.kind = DriftKind::power_cusp;
        d.exponent = theta;
        d.cutoff = radius;
        d.besov_meta = BesovParams(theta + 1.0, 1.0);  // |x|^theta integrates to B^{theta+1}_1
        return d;
    }
    static DriftSpec smooth(std::function<double(double)> f, BesovParams meta = BesovParams(1.0, besov_inf)) {
        DriftSpec d;
        d.kind = DriftKind::smooth;
        d.fn = std::move(f);
        d.besov_meta = meta;
        return d;
    }
    static DriftSpec gridded(GridField f, BesovParams meta = BesovParams(0.0, 1.0)) {
        f.validate();
        DriftSpec d;
        d.kind = DriftKind::gridded;
        d.field = std::move(f);
        d.besov_meta = meta;
        return d;
    }

    /// Measure variants are nonnegative finite measures with exact masses.
    bool is_measure() const {
        switch (kind) {
            case DriftKind::dirac:
            case DriftKind::gaussian: return mass >= 0.0;
            case DriftKind::power_cusp: return true;
            case DriftKind::gridded:
                return std::all_of(field.values.begin(), field.values.end(),
                                   [](double v) { return v >= 0.0; });
            case DriftKind::smooth: return false;
        }
        return false;
    }

    bool pointwise_evaluable() const { return kind != DriftKind::dirac; }

    /// Pointwise value; throws for dirac (not a function). The cusp returns
    /// +infinity at the origin, which downstream quadratures must reject.
    double eval(double x) const {
        switch (kind) {
            case DriftKind::dirac:
                throw std::domain_error("DriftSpec: dirac drift has no pointwise values");
            case DriftKind::gaussian: return mass * heat_kernel(width, x);
            case DriftKind::power_cusp: {
                const double a = std::abs(x);
                if (a > cutoff) return 0.0;
                return std::pow(a, exponent);
            }
            case DriftKind::smooth: return fn(x);
            case DriftKind::gridded: return field.interpolate(x);
        }
        return 0.0;
    }

    /// Total integral, exact for closed forms; throws for smooth closures.
    double total_mass() const {
        switch (kind) {
            case DriftKind::dirac:
            case DriftKind::gaussian: return mass;
            case DriftKind::power_cusp:
                return 2.0 * std::pow(cutoff, 1.0 + exponent) / (1.0 + exponent);
            case DriftKind::gridded: {
                double acc = 0.0;
                for (double v : field.values) acc += v;
                return acc * field.dx();
            }
            case DriftKind::smooth:
                throw std::domain_error("DriftSpec: no closed-form mass for smooth closures");
        }
        return 0.0;
    }

    /// Exact integral of the drift over [lo, hi] divided by (hi - lo), for
    /// cell-averaged convolutions. Handles the cusp's singular cell by the
    /// power rule instead of sampling it.
    double cell_average(double lo, double hi) const {
        if (!(hi > lo)) throw std::invalid_argument("DriftSpec::cell_average: empty cell");
        const double w = hi - lo;
        switch (kind) {
            case DriftKind::dirac:
                throw std::domain_error("DriftSpec: dirac drift has no cell averages");
            case DriftKind::gaussian: {
                const double r = std::sqrt(2.0 * width);
                return 0.5 * mass * (std::erf(hi / r) - std::erf(lo / r)) / w;
            }
            case DriftKind::power_cusp: {
                const double a = std::max(lo, -cutoff), b = std::min(hi, cutoff);
                if (!(b > a)) return 0.0;
                // antiderivative of |u|^theta is sign(u) |u|^{theta+1}/(theta+1)
                auto anti = [this](double u) {
                    const double e = exponent + 1.0;
                    return (u >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(u), e) / e;
                };
                return (anti(b) - anti(a)) / w;
            }
            case DriftKind::smooth: {
                // two-point Gauss: exact for cubics, cheap enough per cell
                const double c = 0.5 * (lo + hi), h = 0.5 * w / std::sqrt(3.0);
                return 0.5 * (fn(c - h) + fn(c + h));
            }
            case DriftKind::gridded: {
                // trapezoid against the interpolant
                const double c = 0.5 * (lo + hi);
                return (field.interpolate(lo) + 4.0 * field.interpolate(c) +
                        field.interpolate(hi)) / 6.0;
            }
        }
        return 0.0;
    }
};

/// Samples a drift onto a periodic window. Diracs split their mass between
/// the two neighbouring points (first-moment preserving); the cusp uses
/// exact cell averages so its singular cell carries the right mass.
inline GridField rasterize_drift(const DriftSpec& b, double x_min, double x_max, int m) {
    GridField out(x_min, x_max, m);
    const double h = out.dx();
    switch (b.kind) {
        case DriftKind::dirac: {
            const double u = (0.0 - x_min) / h;
            const int j = static_cast<int>(std::floor(u));
            if (j < 0 || j + 1 >= m)
                throw std::domain_error("rasterize_drift: window does not contain the dirac");
            const double frac = u - j;
            out.values[static_cast<std::size_t>(j)] += b.mass * (1.0 - frac) / h;
            out.values[static_cast<std::size_t>(j + 1)] += b.mass * frac / h;
            break;
        }
        case DriftKind::power_cusp:
            for (int j = 0; j < m; ++j)
                out.values[static_cast<std::size_t>(j)] =
                    b.cell_average(out.x(j) - 0.5 * h, out.x(j) + 0.5 * h);
            break;
        case DriftKind::gaussian:
        case DriftKind::smooth:
            for (int j = 0; j < m; ++j) out.values[static_cast<std::size_t>(j)] = b.eval(out.x(j));
            break;
        case DriftKind::gridded:
            if (b.field.x_min == x_min && b.field.x_max == x_max && b.field.m_points == m)
                return b.field;
            for (int j = 0; j < m; ++j)
                out.values[static_cast<std::size_t>(j)] = b.field.interpolate(out.x(j));
            break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian semigroup
// ---------------------------------------------------------------------------

namespace detail {

/// Applies a real even Fourier multiplier on the periodic window.
inline GridField apply_multiplier(const GridField& f, const std::function<double(double)>& mult) {
    const int m = f.m_points;
    std::vector<std::complex<double>> z(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) z[static_cast<std::size_t>(j)] = f.values[static_cast<std::size_t>(j)];
    fft_forward(z);
    const double base = 2.0 * M_PI / f.length();
    for (int k = 0; k < m; ++k) {
        const int kk = (k <= m / 2) ? k : k - m;
        z[static_cast<std::size_t>(k)] *= mult(base * kk);
    }
    fft_inverse(z);
    GridField out(f.x_min, f.x_max, m);
    for (int j = 0; j < m; ++j) out.values[static_cast<std::size_t>(j)] = z[static_cast<std::size_t>(j)].real();
    return out;
}

/// Pointwise heat smoothing of the truncated power cusp, via the
/// substitution u = y^{1+theta} that removes the singularity.
inline double heat_of_cusp(double t, double theta, double radius, double x) {
    const double e = 1.0 + theta;
    const double hi = std::pow(radius, e);
    auto integrand = [=](double u) {
        const double y = std::pow(u, 1.0 / e);
        return heat_kernel(t, x - y) + heat_kernel(t, x + y);
    };
    const double val = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        integrand, 0.0, hi, 12, 1e-12);
    return val / e;
}

}  // namespace detail

/// Heat smoothing of a grid field through the spectral multiplier
/// exp(-t xi^2 / 2) on the periodic window.
inline GridField gaussian_semigroup(const GridField& f, double t) {
    if (!(t > 0.0)) throw std::domain_error("gaussian_semigroup: t must be > 0");
    return detail::apply_multiplier(f, [t](double xi) { return std::exp(-0.5 * t * xi * xi); });
}

/// Heat smoothing of a drift. Closed forms stay closed (dirac -> gaussian,
/// gaussian widens); the cusp becomes a smooth closure evaluated by exact
/// quadrature; smooth closures compose with a quadrature of the kernel;
/// gridded fields use the spectral route.
inline DriftSpec gaussian_semigroup(const DriftSpec& b, double t) {
    if (!(t > 0.0)) throw std::domain_error("gaussian_semigroup: t must be > 0");
    switch (b.kind) {
        case DriftKind::dirac: {
            DriftSpec out = DriftSpec::gaussian(b.mass, t);
            out.besov_meta = b.besov_meta;
            return out;
        }
        case DriftKind::gaussian: {
            DriftSpec out = DriftSpec::gaussian(b.mass, b.width + t);
            out.besov_meta = b.besov_meta;
            return out;
        }
        case DriftKind::power_cusp: {
            const double theta = b.exponent, radius = b.cutoff;
            DriftSpec out = DriftSpec::smooth(
                [t, theta, radius](double x) { return detail::heat_of_cusp(t, theta, radius, x); },
                b.besov_meta);
            return out;
        }
        case DriftKind::smooth: {
            auto base = b.fn;
            const double span = 8.0 * std::sqrt(t);
            DriftSpec out = DriftSpec::smooth(
                [t, span, base](double x) {
                    auto integrand = [&](double y) { return heat_kernel(t, y) * base(x - y); };
                    return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
                        integrand, -span, span, 10, 1e-10);
                },
                b.besov_meta);
            return out;
        }
        case DriftKind::gridded: {
            DriftSpec out = DriftSpec::gridded(gaussian_semigroup(b.field, t), b.besov_meta);
            return out;
        }
    }
    throw std::logic_error("gaussian_semigroup: unknown drift kind");
}

/// Mollification at level n: convolution with the heat kernel at time 1/n.
template <class FieldOrDrift>
inline FieldOrDrift mollify(const FieldOrDrift& b, int n) {
    if (n < 1) throw std::invalid_argument("mollify: level must be >= 1");
    return gaussian_semigroup(b, 1.0 / n);
}

// ---------------------------------------------------------------------------
// Littlewood-Paley blocks and Besov norms
// ---------------------------------------------------------------------------

/// The fixed dyadic partition of unity: chi is 1 on [-inner, inner] and
/// supported in [-outer, outer]; rho(xi) = chi(xi/2) - chi(xi) is supported
/// in inner <= |xi| <= 2*outer; chi + sum_j rho(2^-j xi) telescopes to 1.
struct PartitionSpec {
    double inner = 0.75;
    double outer = 4.0 / 3.0;
};

namespace detail {

inline double bump_transition(double u) {
    // C^inf step: 0 for u <= 0, 1 for u >= 1
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double c = std::exp(-1.0 / (1.0 - u));
    return a / (a + c);
}

}  // namespace detail

inline double lp_chi(double xi, const PartitionSpec& spec = {}) {
    const double a = std::abs(xi);
    if (a <= spec.inner) return 1.0;
    if (a >= spec.outer) return 0.0;
    return detail::bump_transition((spec.outer - a) / (spec.outer - spec.inner));
}

inline double lp_rho(double xi, const PartitionSpec& spec = {}) {
    return lp_chi(0.5 * xi, spec) - lp_chi(xi, spec);
}

struct BlockDecomposition {
    // blocks[0] is the low-pass (chi) block; blocks[i] for i >= 1 carries the
    // annulus rho(2^{-(i-1)} xi). block_index(i) returns the dyadic index j.
    std::vector<GridField> blocks;
    PartitionSpec partition;
    bool truncation_warning = false;

    static int block_index(std::size_t position) { return static_cast<int>(position) - 1; }
};

inline BlockDecomposition littlewood_paley_blocks(const GridField& f, PartitionSpec spec = {}) {
    BlockDecomposition out;
    out.partition = spec;
    // warn when the field carries visible mass at the window edge (periodic
    // wrap-around would alias it)
    double edge = std::max(std::abs(f.values.front()), std::abs(f.values.back()));
    double peak = 0.0;
    for (double v : f.values) peak = std::max(peak, std::abs(v));
    out.truncation_warning = (peak > 0.0 && edge > 1e-8 * peak);

    const double xi_max = M_PI * f.m_points / f.length();
    int j_top = 0;
    while (std::ldexp(spec.inner, j_top + 1) < xi_max) ++j_top;
    // chi(2^{-(j_top+1)} xi) = 1 for every grid frequency, so blocks -1..j_top
    // reconstruct exactly
    out.blocks.reserve(static_cast<std::size_t>(j_top) + 2);
    out.blocks.push_back(detail::apply_multiplier(f, [&](double xi) { return lp_chi(xi, spec); }));
    for (int j = 0; j <= j_top; ++j)
        out.blocks.push_back(detail::apply_multiplier(
            f, [&](double xi) { return lp_rho(std::ldexp(xi, -j), spec); }));
    return out;
}

/// Windowed Besov norm estimator: ell^q aggregation of 2^{js} ||Delta_j f||_{L^p}.
inline double besov_norm(const GridField& f, const BesovParams& par, PartitionSpec spec = {}) {
    BlockDecomposition dec = littlewood_paley_blocks(f, spec);
    std::vector<double> weighted;
    weighted.reserve(dec.blocks.size());
    for (std::size_t i = 0; i < dec.blocks.size(); ++i) {
        const int j = BlockDecomposition::block_index(i);
        weighted.push_back(lp_norm(dec.blocks[i], par.p) * std::pow(2.0, j * par.s));
    }
    if (std::isinf(par.q)) {
        double m = 0.0;
        for (double w : weighted) m = std::max(m, w);
        return m;
    }
    if (par.q == 2.0) {
        double acc = 0.0;
        for (double w : weighted) acc += w * w;
        return std::sqrt(acc);
    }
    double acc = 0.0;
    for (double w : weighted) acc += std::pow(w, par.q);
    return std::pow(acc, 1.0 / par.q);
}

/// CSV writer for grid fields: header "x,value", one row per point.
inline void write_csv(const GridField& f, const std::string& filename) {
    std::FILE* fp = std::fopen(filename.c_str(), "w");
    if (!fp) throw std::runtime_error("write_csv: cannot open " + filename);
    std::fputs("x,value\n", fp);
    for (int j = 0; j < f.m_points; ++j)
        std::fprintf(fp, "%.17g,%.17g\n", f.x(j), f.values[static_cast<std::size_t>(j)]);
    std::fclose(fp);
}

}  // namespace fbmlab
