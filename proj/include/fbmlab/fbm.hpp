#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "fbmlab/fft.hpp"
#include "fbmlab/grid.hpp"

namespace fbmlab {

inline void check_hurst(double h) {
    if (!(h > 0.0 && h <= 0.5)) throw std::invalid_argument("hurst must lie in (0, 1/2]");
}

/// Covariance (1/2)(t^{2H} + s^{2H} - |t-s|^{2H}) of fractional Brownian motion.
inline double fbm_covariance(double s, double t, double hurst) {
    check_hurst(hurst);
    if (s < 0.0 || t < 0.0) throw std::domain_error("fbm_covariance: negative time");
    const double a = 2.0 * hurst;
    return 0.5 * (std::pow(t, a) + std::pow(s, a) - std::pow(std::abs(t - s), a));
}

// ---------------------------------------------------------------------------
// Volterra kernel K_H(t,r), 0 < r < t:
//   K_H(t,r) = d_H [ (t/r)^{H-1/2} (t-r)^{H-1/2}
//                    + (1/2-H) r^{1/2-H} \int_r^t z^{H-3/2} (z-r)^{H-1/2} dz ].
// The inner integral reduces by z -> r*z to r^{2H-1} beta_H(t/r) with
//   beta_H(tau) = \int_1^tau z^{H-3/2} (z-1)^{H-1/2} dz,
// and w = 1 - 1/z turns beta_H into an incomplete Beta function:
//   beta_H(tau) = B(1 - 1/tau; H+1/2, 1-2H).
// d_H normalizes \int_0^1 K_H(1,r)^2 dr = 1, so Var(B_t) = t^{2H} exactly by
// the kernel scaling K_H(ct, cr) = c^{H-1/2} K_H(t,r).
// ---------------------------------------------------------------------------

inline double kernel_beta_integral(double tau, double hurst) {
    check_hurst(hurst);
    if (hurst == 0.5) throw std::domain_error("kernel_beta_integral: H must be < 1/2");
    if (tau < 1.0) throw std::domain_error("kernel_beta_integral: tau must be >= 1");
    if (tau == 1.0) return 0.0;
    const double a = hurst + 0.5, b = 1.0 - 2.0 * hurst;
    const double x = 1.0 - 1.0 / tau;
    return boost::math::beta(a, b, x);  // non-normalized incomplete Beta
}

namespace detail {

// Kernel with d_H = 1.
inline double kernel_unnormalized(double t, double r, double hurst) {
    const double h = hurst;
    return std::pow(t / r, h - 0.5) * std::pow(t - r, h - 0.5) +
           (0.5 - h) * std::pow(r, h - 0.5) * kernel_beta_integral(t / r, h);
}

// Bounded remainder S(t,r) = K(t,r) (t-r)^{1/2-H} near the diagonal (d_H = 1).
inline double kernel_smooth_factor(double t, double r, double hurst) {
    const double h = hurst;
    return std::pow(t / r, h - 0.5) +
           (0.5 - h) * std::pow(r, h - 0.5) * kernel_beta_integral(t / r, h) *
               std::pow(t - r, 0.5 - h);
}

// \int_x^y K(1,rho)^2 drho for 0 <= x < y <= 1 and d_H = 1. Endpoint
// singularities (rho^{2H-1} at 0, (1-rho)^{2H-1} at 1) are removed by the
// substitutions v = rho^{2H} and u = (1-rho)^{2H}.
inline double kernel_sq_integral_unit(double x, double y, double hurst) {
    using boost::math::quadrature::gauss_kronrod;
    const double h = hurst;
    const double tol = 1e-11;
    double total = 0.0;
    double lo = x, hi = y;
    if (lo == 0.0) {
        const double c = std::min(hi, 0.5);
        auto f = [h](double v) {
            const double rho = std::pow(v, 1.0 / (2.0 * h));
            const double k = kernel_unnormalized(1.0, rho, h);
            return k * k * std::pow(rho, 1.0 - 2.0 * h) / (2.0 * h);
        };
        total += gauss_kronrod<double, 31>::integrate(f, 0.0, std::pow(c, 2.0 * h), 15, tol);
        lo = c;
    }
    if (hi == 1.0 && lo < 1.0) {
        const double c = std::max(lo, 0.5);
        auto f = [h](double u) {
            const double rho = 1.0 - std::pow(u, 1.0 / (2.0 * h));
            const double s = kernel_smooth_factor(1.0, rho, h);
            return s * s / (2.0 * h);
        };
        total += gauss_kronrod<double, 31>::integrate(f, 0.0, std::pow(1.0 - c, 2.0 * h), 15, tol);
        hi = c;
    }
    if (lo < hi) {
        auto f = [h](double rho) {
            const double k = kernel_unnormalized(1.0, rho, h);
            return k * k;
        };
        total += gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, tol);
    }
    return total;
}

}  // namespace detail

/// Normalizing constant d_H with \int_0^1 K_H(1,r)^2 dr = 1.
inline double kernel_normalization(double hurst) {
    check_hurst(hurst);
    if (hurst == 0.5) return 1.0;
    static std::map<double, double> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(hurst);
    if (it != cache.end()) return it->second;
    const double i = detail::kernel_sq_integral_unit(0.0, 1.0, hurst);
    if (!(i > 0.0) || !std::isfinite(i))
        throw std::runtime_error("kernel_normalization: quadrature failed");
    const double d = 1.0 / std::sqrt(i);
    cache[hurst] = d;
    return d;
}

/// Volterra kernel K_H(t,r) on 0 < r < t (K == 1 for H = 1/2).
inline double kernel_KH(double t, double r, double hurst) {
    check_hurst(hurst);
    if (!(r > 0.0 && r < t)) throw std::domain_error("kernel_KH: need 0 < r < t");
    if (hurst == 0.5) return 1.0;
    return kernel_normalization(hurst) * detail::kernel_unnormalized(t, r, hurst);
}

/// Conditional variance over [s,u] toward horizon t:
/// E[(E^u[B_t] - E^s[B_t])^2] = \int_s^u K_H(t,r)^2 dr; 0 <= s < u <= t.
inline double two_time_variance(double s, double u, double t, double hurst) {
    check_hurst(hurst);
    if (!(0.0 <= s && s < u && u <= t && t > 0.0))
        throw std::domain_error("two_time_variance: need 0 <= s < u <= t");
    if (hurst == 0.5) return u - s;
    const double d = kernel_normalization(hurst);
    return d * d * std::pow(t, 2.0 * hurst) *
           detail::kernel_sq_integral_unit(s / t, u / t, hurst);
}

/// sigma^2_{s,t} = Var(B_t - E^s[B_t]) = \int_s^t K_H(t,r)^2 dr.
inline double conditional_variance(double s, double t, double hurst) {
    return two_time_variance(s, t, t, hurst);
}

// ---------------------------------------------------------------------------
// Samplers. All draw N(0,1) through std::normal_distribution over
// std::mt19937_64; identical (seed, stream_id) reproduce the path bit for bit.
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> standard_normals(std::mt19937_64& eng, std::size_t count) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> z(count);
    for (auto& v : z) v = dist(eng);
    return z;
}

}  // namespace detail

/// Exact sampler from the Cholesky factor of the covariance matrix.
class CholeskySampler {
  public:
    CholeskySampler(Grid grid, double hurst) : grid_(grid), hurst_(hurst) {
        check_hurst(hurst);
        if (grid.n_steps > 4096)
            throw std::invalid_argument("CholeskySampler: n_steps > 4096 (O(n^2) memory guard)");
        const int n = grid.n_steps;
        Eigen::MatrixXd cov(n, n);
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= i; ++j) {
                const double c = fbm_covariance(grid.t(i), grid.t(j), hurst);
                cov(i - 1, j - 1) = c;
                cov(j - 1, i - 1) = c;
            }
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("CholeskySampler: covariance not positive definite");
        factor_ = llt.matrixL();
    }

    SamplePath sample(RngSeed seed) const {
        auto eng = seed.engine();
        const int n = grid_.n_steps;
        auto z = detail::standard_normals(eng, static_cast<std::size_t>(n));
        std::vector<double> vals(grid_.size(), 0.0);
        // lower-triangular product x = L z
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j <= i; ++j) acc += factor_(i, j) * z[static_cast<std::size_t>(j)];
            vals[static_cast<std::size_t>(i + 1)] = acc;
        }
        return SamplePath(grid_, std::move(vals), PathLabel::fbm);
    }

    const Grid& grid() const { return grid_; }
    double hurst() const { return hurst_; }

  private:
    Grid grid_;
    double hurst_;
    Eigen::MatrixXd factor_;
};

/// Circulant-embedding sampler for the increment process (n must be a power
/// of two; the 2n-point embedding of fractional Gaussian noise is
/// nonnegative-definite for H <= 1/2).
class CirculantSampler {
  public:
    CirculantSampler(Grid grid, double hurst) : grid_(grid), hurst_(hurst) {
        check_hurst(hurst);
        const int n = grid.n_steps;
        if (n < 2 || (n & (n - 1)) != 0)
            throw std::invalid_argument("CirculantSampler: n_steps must be a power of two");
        const std::size_t m = 2 * static_cast<std::size_t>(n);
        const double dt = grid.dt();
        auto gamma = [&](std::size_t k) {
            const double a = 2.0 * hurst;
            const double kk = static_cast<double>(k);
            return 0.5 * std::pow(dt, a) *
                   (std::pow(kk + 1.0, a) - 2.0 * std::pow(kk, a) +
                    std::pow(std::abs(kk - 1.0), a));
        };
        std::vector<std::complex<double>> c(m);
        for (std::size_t k = 0; k <= static_cast<std::size_t>(n); ++k) c[k] = gamma(k);
        for (std::size_t k = static_cast<std::size_t>(n) + 1; k < m; ++k) c[k] = c[m - k];
        fft_forward(c);
        eigenvalues_.resize(m);
        double max_ev = 0.0, min_ev = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            eigenvalues_[k] = c[k].real();
            max_ev = std::max(max_ev, eigenvalues_[k]);
            min_ev = std::min(min_ev, eigenvalues_[k]);
        }
        const double tol = 1e-10 * std::max(1.0, max_ev);
        if (min_ev < -tol)
            throw std::runtime_error(
                "CirculantSampler: embedding has negative eigenvalue " + std::to_string(min_ev));
        for (auto& ev : eigenvalues_)
            if (ev < 0.0) ev = 0.0;
    }

    SamplePath sample(RngSeed seed) const {
        auto eng = seed.engine();
        std::normal_distribution<double> dist(0.0, 1.0);
        const std::size_t m = eigenvalues_.size();
        const std::size_t half = m / 2;
        const double dm = static_cast<double>(m);
        std::vector<std::complex<double>> y(m);
        y[0] = std::sqrt(eigenvalues_[0] / dm) * dist(eng);
        for (std::size_t k = 1; k < half; ++k) {
            const double a = dist(eng), b = dist(eng);
            const double s = std::sqrt(eigenvalues_[k] / (2.0 * dm));
            y[k] = std::complex<double>(s * a, s * b);
            y[m - k] = std::conj(y[k]);
        }
        y[half] = std::sqrt(eigenvalues_[half] / dm) * dist(eng);
        fft_forward(y);
        const int n = grid_.n_steps;
        std::vector<double> vals(grid_.size(), 0.0);
        double acc = 0.0;
        for (int k = 0; k < n; ++k) {
            acc += y[static_cast<std::size_t>(k)].real();
            vals[static_cast<std::size_t>(k + 1)] = acc;
        }
        return SamplePath(grid_, std::move(vals), PathLabel::fbm);
    }

    const Grid& grid() const { return grid_; }
    double hurst() const { return hurst_; }

  private:
    Grid grid_;
    double hurst_;
    std::vector<double> eigenvalues_;
};

/// Sampler from the Volterra representation B_t = \int_0^t K_H(t,r) dW_r,
/// returning the coupled (W, B) pair. The kernel is cell-averaged with the
/// diagonal factor (t-r)^{H-1/2} integrated exactly over each cell and the
/// bounded remainder frozen at the cell midpoint.
class VolterraSampler {
  public:
    VolterraSampler(Grid grid, double hurst) : grid_(grid), hurst_(hurst) {
        check_hurst(hurst);
        if (hurst == 0.5) return;  // kernel == 1, B == W
        const int n = grid.n_steps;
        if (static_cast<std::size_t>(n) > 8192)
            throw std::invalid_argument("VolterraSampler: n_steps > 8192 (O(n^2) memory guard)");
        weights_.resize(static_cast<std::size_t>(n) * (n + 1) / 2);
        const double d = kernel_normalization(hurst);
        const double c = hurst + 0.5;
        const double dt = grid.dt();
        const double inv_cdt = 1.0 / (c * dt);
        std::size_t idx = 0;
        for (int k = 1; k <= n; ++k) {
            const double t = grid.t(k);
            for (int j = 0; j < k; ++j) {
                const double a = grid.t(j), b = grid.t(j + 1);
                const double mid = 0.5 * (a + b);
                const double s = d * detail::kernel_smooth_factor(t, mid, hurst);
                const double ta = std::pow(t - a, c);
                const double tb = (k == j + 1) ? 0.0 : std::pow(t - b, c);
                weights_[idx++] = s * (ta - tb) * inv_cdt;
            }
        }
    }

    /// Cell-averaged kernel weight multiplying the increment W_{t_{j+1}}-W_{t_j}
    /// in B_{t_k}; requires 0 <= j < k.
    double weight(int k, int j) const {
        if (hurst_ == 0.5) return 1.0;
        return weights_[static_cast<std::size_t>(k) * (k - 1) / 2 + j];
    }

    PathPair sample(RngSeed seed) const {
        auto eng = seed.engine();
        const int n = grid_.n_steps;
        const double sq_dt = std::sqrt(grid_.dt());
        std::vector<double> dw(static_cast<std::size_t>(n));
        {
            std::normal_distribution<double> dist(0.0, 1.0);
            for (auto& v : dw) v = sq_dt * dist(eng);
        }
        std::vector<double> w(grid_.size(), 0.0);
        for (int k = 0; k < n; ++k)
            w[static_cast<std::size_t>(k + 1)] = w[static_cast<std::size_t>(k)] + dw[static_cast<std::size_t>(k)];
        PathPair pair;
        pair.hurst = hurst_;
        pair.bm = SamplePath(grid_, std::move(w), PathLabel::bm);
        pair.fbm = transform_increments(dw);
        return pair;
    }

    /// Applies the kernel quadrature to a given coarse-scale Brownian path.
    SamplePath transform(const SamplePath& bm) const {
        if (!(bm.grid == grid_)) throw std::invalid_argument("VolterraSampler: grid mismatch");
        std::vector<double> dw(static_cast<std::size_t>(grid_.n_steps));
        for (int k = 0; k < grid_.n_steps; ++k)
            dw[static_cast<std::size_t>(k)] = bm[k + 1] - bm[k];
        return transform_increments(dw);
    }

    const Grid& grid() const { return grid_; }
    double hurst() const { return hurst_; }

  private:
    SamplePath transform_increments(const std::vector<double>& dw) const {
        const int n = grid_.n_steps;
        std::vector<double> vals(grid_.size(), 0.0);
        if (hurst_ == 0.5) {
            for (int k = 0; k < n; ++k)
                vals[static_cast<std::size_t>(k + 1)] =
                    vals[static_cast<std::size_t>(k)] + dw[static_cast<std::size_t>(k)];
        } else {
            for (int k = 1; k <= n; ++k) {
                const double* row = &weights_[static_cast<std::size_t>(k) * (k - 1) / 2];
                double acc = 0.0;
                for (int j = 0; j < k; ++j) acc += row[j] * dw[static_cast<std::size_t>(j)];
                vals[static_cast<std::size_t>(k)] = acc;
            }
        }
        return SamplePath(grid_, std::move(vals), PathLabel::fbm);
    }

    Grid grid_;
    double hurst_;
    std::vector<double> weights_;
};

/// One-shot conveniences.
inline SamplePath sample_fbm_cholesky(Grid grid, double hurst, RngSeed seed) {
    return CholeskySampler(grid, hurst).sample(seed);
}
inline SamplePath sample_fbm_circulant(Grid grid, double hurst, RngSeed seed) {
    return CirculantSampler(grid, hurst).sample(seed);
}
inline PathPair sample_fbm_volterra(Grid grid, double hurst, RngSeed seed) {
    return VolterraSampler(grid, hurst).sample(seed);
}

/// E^s[B_t] = \int_0^s K_H(t,r) dW_r evaluated by the same cell-averaged
/// quadrature as the sampler; s and t must be grid times, s <= t.
inline double conditional_mean(const PathPair& pair, double s, double t) {
    const Grid& g = pair.bm.grid;
    const int ks = g.index_of(s);
    const int kt = g.index_of(t);
    if (ks > kt) throw std::domain_error("conditional_mean: need s <= t");
    if (ks == 0) return 0.0;
    if (pair.hurst == 0.5) return pair.bm[ks];
    const double d = kernel_normalization(pair.hurst);
    const double c = pair.hurst + 0.5;
    const double dt = g.dt();
    const double inv_cdt = 1.0 / (c * dt);
    const double tt = g.t(kt);
    double acc = 0.0;
    for (int j = 0; j < ks; ++j) {
        const double a = g.t(j), b = g.t(j + 1);
        const double sfac = d * detail::kernel_smooth_factor(tt, 0.5 * (a + b), pair.hurst);
        const double ta = std::pow(tt - a, c);
        const double tb = (kt == j + 1) ? 0.0 : std::pow(tt - b, c);
        acc += sfac * (ta - tb) * inv_cdt * (pair.bm[j + 1] - pair.bm[j]);
    }
    return acc;
}

/// Max deviation between pair.fbm and the kernel transform of pair.bm.
inline double pair_consistency_error(const PathPair& pair) {
    VolterraSampler sampler(pair.bm.grid, pair.hurst);
    SamplePath re = sampler.transform(pair.bm);
    double m = 0.0;
    for (std::size_t i = 0; i < re.values.size(); ++i)
        m = std::max(m, std::abs(re.values[i] - pair.fbm.values[i]));
    return m;
}

}  // namespace fbmlab
