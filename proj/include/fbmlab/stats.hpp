#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace fbmlab {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Ordinary least squares y ~ slope*x + intercept.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) { sx += x[i]; sy += y[i]; }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

inline double covariance(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("covariance: size mismatch");
    const double ma = mean(a), mb = mean(b);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size());
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
    const double va = variance(a), vb = variance(b);
    if (va == 0.0 || vb == 0.0) return 0.0;
    return covariance(a, b) / std::sqrt(va * vb);
}

/// Raw kurtosis E[(x-m)^4] / Var^2 (3 for a Gaussian).
inline double kurtosis(const std::vector<double>& v) {
    const double m = mean(v), var = variance(v);
    if (var == 0.0) return 0.0;
    double s = 0;
    for (double x : v) {
        const double d = x - m;
        s += d * d * d * d;
    }
    return s / (static_cast<double>(v.size()) * var * var);
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median: empty");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Exact p-variation sum over all sub-partitions of 0..n_points-1 by dynamic
/// programming: best(i) = max_{j<i} best(j) + dist(j, i)^p. Returns the p-th
/// root. `dist` must be a nonnegative distance between index pairs.
inline double pvar_dp(int n_points, const std::function<double(int, int)>& dist, double p) {
    if (p < 1.0) throw std::invalid_argument("pvar_dp: p must be >= 1");
    if (n_points < 2) return 0.0;
    std::vector<double> best(static_cast<std::size_t>(n_points), 0.0);
    for (int i = 1; i < n_points; ++i) {
        double b = 0.0;
        for (int j = 0; j < i; ++j)
            b = std::max(b, best[static_cast<std::size_t>(j)] + std::pow(dist(j, i), p));
        best[static_cast<std::size_t>(i)] = b;
    }
    return std::pow(best.back(), 1.0 / p);
}

}  // namespace fbmlab
