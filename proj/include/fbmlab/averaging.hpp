#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmlab/besov.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/fft.hpp"
#include "fbmlab/localtime.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab {

// ---------------------------------------------------------------------------
// The path-averaging operator V(t, y) = integral over [0, t] of b(y + w_r) dr,
// computed two ways: direct time quadrature for pointwise drifts, and
// convolution of b against the reflected local time for distributional ones.
// ---------------------------------------------------------------------------

struct AveragedField {
    Grid time_grid;
    SpaceGrid space_grid;
    std::vector<double> values;  // (n_steps + 1) rows of m_cells values
    DriftSpec drift_meta;

    double at(int k, int j) const {
        return values[static_cast<std::size_t>(k) * space_grid.m_cells + j];
    }
    double& at(int k, int j) {
        return values[static_cast<std::size_t>(k) * space_grid.m_cells + j];
    }

    /// Row value at an off-center y by linear interpolation between cell
    /// centers (flat within the outer half-cells). Throws when y leaves the
    /// window.
    double interp_row(int k, double y) const {
        const SpaceGrid& s = space_grid;
        if (y < s.x_min || y > s.x_max)
            throw window_error("AveragedField: evaluation point left the space window");
        const double u = (y - s.x_min) / s.dx() - 0.5;
        if (u <= 0.0) return at(k, 0);
        if (u >= s.m_cells - 1) return at(k, s.m_cells - 1);
        const int j = static_cast<int>(std::floor(u));
        const double w = u - j;
        return at(k, j) + w * (at(k, j + 1) - at(k, j));
    }
};

namespace detail {

/// Effective support [lo, hi] of a drift, for window sizing checks; smooth
/// closures report nothing (the caller owns their support).
inline bool drift_support(const DriftSpec& b, double& lo, double& hi) {
    switch (b.kind) {
        case DriftKind::dirac: lo = hi = 0.0; return true;
        case DriftKind::gaussian: {
            const double r = 8.0 * std::sqrt(b.width);
            lo = -r;
            hi = r;
            return true;
        }
        case DriftKind::power_cusp: lo = -b.cutoff, hi = b.cutoff; return true;
        case DriftKind::gridded: lo = b.field.x_min, hi = b.field.x_max; return true;
        case DriftKind::smooth: return false;
    }
    return false;
}

/// Exact integrals of b over the lattice J_s = [2 x_min + (s + 1/2) dx,
/// 2 x_min + (s + 3/2) dx), s = 0..2m-2 — the only intervals a window point y
/// and a window cell c can combine to: V(t, y_j) = sum_c L_t[c] B[c + j].
/// Arguments y + w only ever reach [2 x_min, 2 x_max]; drift mass beyond that
/// would be silently truncated, so it is rejected instead.
inline std::vector<double> averaging_kernel(const DriftSpec& b, const SpaceGrid& space) {
    double blo = 0.0, bhi = 0.0;
    const double tol = 1e-12 * (space.x_max - space.x_min);
    if (drift_support(b, blo, bhi) &&
        (blo < 2.0 * space.x_min - tol || bhi > 2.0 * space.x_max + tol))
        throw window_error(
            "averaging: space window narrower than the drift's effective support");
    const int m = space.m_cells;
    const double dx = space.dx();
    const double base = 2.0 * space.x_min;
    std::vector<double> kernel(static_cast<std::size_t>(2 * m - 1));
    for (int s = 0; s < 2 * m - 1; ++s) {
        const double lo = base + (s + 0.5) * dx;
        kernel[static_cast<std::size_t>(s)] = b.cell_average(lo, lo + dx) * dx;
    }
    return kernel;
}

/// Row-by-row kernel application accumulated over the sparse time increments
/// of the local time; products of nonnegative terms keep measure drifts
/// exactly monotone in t.
inline void apply_kernel_incremental(const LocalTimeField& lt, const std::vector<double>& kernel,
                                     AveragedField& out) {
    const int n = lt.time_grid.n_steps, m = lt.space_grid.m_cells;
    for (int k = 0; k < n; ++k) {
        double* prev = &out.values[static_cast<std::size_t>(k) * m];
        double* next = &out.values[static_cast<std::size_t>(k + 1) * m];
        std::copy(prev, prev + m, next);
        for (int c = 0; c < m; ++c) {
            const double d = lt.at(k + 1, c) - lt.at(k, c);
            if (d == 0.0) continue;
            const double* ks = kernel.data() + c;
            for (int j = 0; j < m; ++j) next[j] += d * ks[j];
        }
    }
}

/// Same correlation per full row via FFT (kernel length 2m-1, rows length m,
/// linear convolution padded to a power of two).
inline void apply_kernel_fft(const LocalTimeField& lt, const std::vector<double>& kernel,
                             AveragedField& out) {
    const int n = lt.time_grid.n_steps, m = lt.space_grid.m_cells;
    std::size_t pad = 1;
    while (pad < static_cast<std::size_t>(3 * m)) pad *= 2;
    std::vector<std::complex<double>> fk(pad, 0.0);
    for (std::size_t s = 0; s < kernel.size(); ++s) fk[s] = kernel[s];
    fft_forward(fk);
    std::vector<std::complex<double>> buf(pad);
    for (int k = 1; k <= n; ++k) {
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0));
        for (int c = 0; c < m; ++c) buf[static_cast<std::size_t>(c)] = lt.at(k, m - 1 - c);
        fft_forward(buf);
        for (std::size_t i = 0; i < pad; ++i) buf[i] *= fk[i];
        fft_inverse(buf);
        for (int j = 0; j < m; ++j)
            out.at(k, j) = buf[static_cast<std::size_t>(m - 1 + j)].real();
    }
}

}  // namespace detail

/// Trapezoidal time quadrature of b(y + w_r) at every cell center. Requires a
/// pointwise-evaluable drift with finite values along the path.
inline AveragedField averaging_direct(const DriftSpec& b, const SamplePath& path,
                                      const SpaceGrid& space) {
    if (!b.pointwise_evaluable())
        throw std::invalid_argument(
            "averaging_direct: drift has no pointwise values; use averaging_via_localtime");
    const int n = path.grid.n_steps, m = space.m_cells;
    AveragedField out{path.grid, space, {}, b};
    out.values.assign(static_cast<std::size_t>(n + 1) * m, 0.0);
    std::vector<double> e0(static_cast<std::size_t>(m)), e1(static_cast<std::size_t>(m));
    auto eval_row = [&](double w, std::vector<double>& e) {
        for (int j = 0; j < m; ++j) {
            e[static_cast<std::size_t>(j)] = b.eval(space.center(j) + w);
            if (!std::isfinite(e[static_cast<std::size_t>(j)]))
                throw std::domain_error(
                    "averaging_direct: drift is unbounded on the grid (cusp hit a grid "
                    "point); use averaging_via_localtime");
        }
    };
    eval_row(path[0], e0);
    const double half_dt = 0.5 * path.grid.dt();
    for (int k = 0; k < n; ++k) {
        eval_row(path[k + 1], e1);
        for (int j = 0; j < m; ++j)
            out.at(k + 1, j) =
                out.at(k, j) +
                half_dt * (e0[static_cast<std::size_t>(j)] + e1[static_cast<std::size_t>(j)]);
        e0.swap(e1);
    }
    return out;
}

/// Convolution of b with the reflected local time, row by row. Dirac drifts
/// reduce to an exact index reversal about the cell containing the atom;
/// power cusps use exact per-cell integrals accumulated incrementally (keeps
/// measure positivity exact); gaussian/smooth/gridded drifts use FFT
/// convolution of the same exact cell-integral kernel.
inline AveragedField averaging_via_localtime(const DriftSpec& b, const LocalTimeField& lt) {
    const SpaceGrid& space = lt.space_grid;
    const int n = lt.time_grid.n_steps, m = space.m_cells;
    AveragedField out{lt.time_grid, space, {}, b};
    out.values.assign(static_cast<std::size_t>(n + 1) * m, 0.0);

    if (b.kind == DriftKind::dirac) {
        // V(t, center(j)) = mass * L_t(-center(j)): an index reversal. When
        // -2 x_min is a whole number of cells the reversal j -> s - 1 - j is
        // exact (symmetric dyadic windows qualify); otherwise the reversal is
        // re-centered about the cell containing the atom, accurate to one
        // cell. Reflections landing outside the window read a zero local
        // time, including the degenerate case of a window missing the atom.
        if (space.x_min > 0.0 || space.x_max < 0.0) return out;
        const double r = -2.0 * space.x_min / space.dx();
        const double rs = std::nearbyint(r);
        const bool aligned = std::abs(r - rs) <= 1e-9 * (1.0 + std::abs(rs));
        const int s = aligned ? static_cast<int>(rs) : 2 * space.cell_of(0.0) + 1;
        for (int k = 0; k <= n; ++k)
            for (int j = 0; j < m; ++j) {
                const int jr = s - 1 - j;
                out.at(k, j) = (jr >= 0 && jr < m) ? b.mass * lt.at(k, jr) : 0.0;
            }
        return out;
    }

    const std::vector<double> kernel = detail::averaging_kernel(b, space);
    if (b.kind == DriftKind::power_cusp)
        detail::apply_kernel_incremental(lt, kernel, out);
    else
        detail::apply_kernel_fft(lt, kernel, out);
    return out;
}

// ---------------------------------------------------------------------------
// Mollified-limit validation and field regularity
// ---------------------------------------------------------------------------

struct MollifiedLimitReport {
    std::vector<int> n_list;
    std::vector<double> sup_distance;  // per level, vs the local-time route
    bool non_increasing = false;       // beyond float round-off
};

/// For each n, averages the mollified drift by direct quadrature along the
/// path and reports the sup distance to the local-time route applied to the
/// unmollified drift — the distances must shrink toward the discretization
/// floor as the mollifier sharpens.
inline MollifiedLimitReport mollified_operator_limit(const DriftSpec& b, const SamplePath& path,
                                                     const LocalTimeField& lt,
                                                     const std::vector<int>& n_list) {
    if (n_list.empty()) throw std::invalid_argument("mollified_operator_limit: empty n list");
    for (std::size_t i = 0; i + 1 < n_list.size(); ++i)
        if (n_list[i + 1] <= n_list[i])
            throw std::invalid_argument("mollified_operator_limit: n list must increase");
    if (!(path.grid == lt.time_grid))
        throw std::invalid_argument("mollified_operator_limit: path and field grids differ");

    const AveragedField limit = averaging_via_localtime(b, lt);
    MollifiedLimitReport rep;
    rep.n_list = n_list;
    for (int n : n_list) {
        const AveragedField vn = averaging_direct(mollify(b, n), path, lt.space_grid);
        double d = 0.0;
        for (std::size_t i = 0; i < vn.values.size(); ++i)
            d = std::max(d, std::abs(vn.values[i] - limit.values[i]));
        rep.sup_distance.push_back(d);
    }
    rep.non_increasing = true;
    for (std::size_t i = 0; i + 1 < rep.sup_distance.size(); ++i)
        if (rep.sup_distance[i + 1] > rep.sup_distance[i] + 1e-12 * (1.0 + rep.sup_distance[i]))
            rep.non_increasing = false;
    return rep;
}

struct FieldRegularityReport {
    double gamma = 0.0;
    double p = 0.0;
    double eta = 0.0;
    double holder_seminorm = 0.0;  // sup over anchor pairs of |row C^eta dist| / (t-s)^gamma
    double pvar_seminorm = 0.0;    // p-variation in t of the row map, C^eta distances
    int time_anchors = 0;
    int space_points = 0;
};

/// Joint-regularity estimate of t -> field(t, ·): the Hölder-in-time
/// seminorm of the C^eta space norm and its p-variation counterpart, both on
/// subsampled anchors (exactness is not claimed, only stable lower bounds).
inline FieldRegularityReport field_regularity(const AveragedField& field, double gamma, double p,
                                              double eta) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("field_regularity: gamma must lie in (0,1)");
    if (!(eta > 0.0 && eta < 1.0))
        throw std::invalid_argument("field_regularity: eta must lie in (0,1)");
    if (!(p >= 1.0)) throw std::invalid_argument("field_regularity: p must be >= 1");

    const int n = field.time_grid.n_steps, m = field.space_grid.m_cells;
    const double dx = field.space_grid.dx();
    std::vector<int> anchors;
    const int stride_t = std::max(1, n / 64);
    for (int k = 0; k <= n; k += stride_t) anchors.push_back(k);
    if (anchors.back() != n) anchors.push_back(n);
    const int na = static_cast<int>(anchors.size());

    const int stride_y = std::max(1, m / 256);
    std::vector<int> ys;
    for (int j = 0; j < m; j += stride_y) ys.push_back(j);
    const int ny = static_cast<int>(ys.size());

    // C^eta distance between two rows on the subsample: sup norm plus the
    // worst dyadic-lag Hölder quotient
    auto row_dist = [&](int ka, int kb) {
        double sup = 0.0;
        for (int j : ys) sup = std::max(sup, std::abs(field.at(kb, j) - field.at(ka, j)));
        double quot = 0.0;
        for (int lag = 1; lag < ny; lag *= 2) {
            const double denom = std::pow(lag * stride_y * dx, eta);
            for (int i = 0; i + lag < ny; ++i) {
                const double ga = field.at(kb, ys[static_cast<std::size_t>(i)]) -
                                  field.at(ka, ys[static_cast<std::size_t>(i)]);
                const double gb = field.at(kb, ys[static_cast<std::size_t>(i + lag)]) -
                                  field.at(ka, ys[static_cast<std::size_t>(i + lag)]);
                quot = std::max(quot, std::abs(gb - ga) / denom);
            }
        }
        return sup + quot;
    };

    std::vector<double> dist(static_cast<std::size_t>(na) * na, 0.0);
    for (int i = 0; i < na; ++i)
        for (int j = i + 1; j < na; ++j)
            dist[static_cast<std::size_t>(i) * na + j] = row_dist(anchors[static_cast<std::size_t>(i)],
                                                                  anchors[static_cast<std::size_t>(j)]);

    FieldRegularityReport rep;
    rep.gamma = gamma;
    rep.p = p;
    rep.eta = eta;
    rep.time_anchors = na;
    rep.space_points = ny;
    for (int i = 0; i < na; ++i)
        for (int j = i + 1; j < na; ++j) {
            const double ds = field.time_grid.t(anchors[static_cast<std::size_t>(j)]) -
                              field.time_grid.t(anchors[static_cast<std::size_t>(i)]);
            rep.holder_seminorm = std::max(
                rep.holder_seminorm,
                dist[static_cast<std::size_t>(i) * na + j] / std::pow(ds, gamma));
        }
    rep.pvar_seminorm = pvar_dp(
        na,
        [&](int i, int j) {
            return dist[static_cast<std::size_t>(std::min(i, j)) * na + std::max(i, j)];
        },
        p);
    return rep;
}

/// Long-format CSV: t,x,value rows.
inline void write_field_csv(std::ostream& os, const AveragedField& f) {
    os << "t,x,value\n";
    char buf[96];
    for (int k = 0; k <= f.time_grid.n_steps; ++k)
        for (int j = 0; j < f.space_grid.m_cells; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", f.time_grid.t(k),
                          f.space_grid.center(j), f.at(k, j));
            os << buf;
        }
}

inline void write_field_csv(const std::string& file, const AveragedField& f) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_field_csv(os, f);
}

}  // namespace fbmlab
