#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmlab/grid.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab {

// ---------------------------------------------------------------------------
// Occupation measures of piecewise-linear paths. Between grid times the path
// is the linear interpolant, so the time spent in each space cell is an exact
// crossing-time computation, not a kernel estimate. Cells are half-open
// [b_j, b_{j+1}). Grids built by `symmetric_dyadic` have all boundaries exact
// dyadic floats, which makes reflection (cell j <-> m-1-j) an exact identity;
// the averaging and solver modules rely on this.
// ---------------------------------------------------------------------------

struct SpaceGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    int m_cells = 0;

    SpaceGrid() = default;
    SpaceGrid(double xmin, double xmax, int m) : x_min(xmin), x_max(xmax), m_cells(m) {
        if (!(x_max > x_min)) throw std::invalid_argument("SpaceGrid: empty window");
        if (m_cells < 1) throw std::invalid_argument("SpaceGrid: need at least one cell");
        if (!(dx() > 0.0)) throw std::domain_error("SpaceGrid: zero-width cells");
        // dyadic detection: half-widths and cell count both powers of two give
        // exactly representable boundaries and an exact mirror map
        if (x_min == -x_max && x_max > 0.0 && (m_cells & (m_cells - 1)) == 0) {
            int e = 0;
            if (std::frexp(x_max, &e) == 0.5) {
                dyadic_ = true;
                inv_dx_ = m_cells / (2.0 * x_max);  // power of two, exact
            }
        }
    }

    /// Window [-X, X] with X the smallest power of two >= half_width_request
    /// and a power-of-two cell count: every boundary is an exact double and
    /// cell_of(-z) == m-1-cell_of(z) holds bitwise away from boundaries.
    static SpaceGrid symmetric_dyadic(double half_width_request, int m_cells_request) {
        if (!(half_width_request > 0.0))
            throw std::invalid_argument("SpaceGrid: half width must be positive");
        double x = 1.0;
        while (x < half_width_request) x *= 2.0;
        while (x * 0.5 >= half_width_request) x *= 0.5;
        int m = 1;
        while (m < m_cells_request) m *= 2;
        return SpaceGrid(-x, x, m);
    }

    double dx() const { return (x_max - x_min) / m_cells; }
    double boundary(int j) const { return x_min + j * dx(); }
    double center(int j) const { return x_min + (j + 0.5) * dx(); }
    bool dyadic() const { return dyadic_; }

    bool covers(double lo, double hi) const { return lo >= x_min && hi <= x_max; }

    /// Cell index of z in [x_min, x_max); the top boundary maps to the last
    /// cell. For dyadic grids the computation is exact (power-of-two multiply).
    int cell_of(double z) const {
        double q;
        if (dyadic_)
            q = std::floor(z * inv_dx_) - std::floor(x_min * inv_dx_);
        else
            q = std::floor((z - x_min) / dx());
        int c = static_cast<int>(q);
        if (c < 0 || c > m_cells || (c == m_cells && z > x_max))
            throw std::domain_error("SpaceGrid: point outside the window");
        return std::min(c, m_cells - 1);
    }

    /// True when z lies exactly on a cell boundary (always exact on dyadic grids).
    bool on_boundary(double z) const {
        if (dyadic_) {
            const double q = z * inv_dx_;
            return q == std::floor(q);
        }
        return z == boundary(cell_of(z));
    }

    bool operator==(const SpaceGrid& o) const {
        return x_min == o.x_min && x_max == o.x_max && m_cells == o.m_cells;
    }

  private:
    bool dyadic_ = false;
    double inv_dx_ = 0.0;
};

/// Time spent per space cell during one time step; cells form the contiguous
/// range [first_cell, first_cell + tau.size()).
struct StepOccupancy {
    int first_cell = 0;
    std::vector<double> tau;
};

/// Sparse per-step occupation of a whole path.
struct PathOccupancy {
    Grid grid;
    SpaceGrid space;
    std::vector<StepOccupancy> steps;

    double step_time_in_cell(int k, int cell) const {
        const StepOccupancy& s = steps[static_cast<std::size_t>(k)];
        const int off = cell - s.first_cell;
        if (off < 0 || off >= static_cast<int>(s.tau.size())) return 0.0;
        return s.tau[static_cast<std::size_t>(off)];
    }

    /// Cumulative local time at one cell: column L_{t_k}(cell) for k = 0..n.
    std::vector<double> column(int cell) const {
        std::vector<double> out(steps.size() + 1, 0.0);
        const double inv_dx = 1.0 / space.dx();
        for (std::size_t k = 0; k < steps.size(); ++k)
            out[k + 1] = out[k] + step_time_in_cell(static_cast<int>(k), cell) * inv_dx;
        return out;
    }
};

/// Default covering grid: [min - 3 dx, max + 3 dx] resolved with m cells.
inline SpaceGrid covering_space_grid(const SamplePath& path, int m_cells) {
    double lo = path.values.front(), hi = lo;
    for (double v : path.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (m_cells <= 6) throw std::invalid_argument("covering_space_grid: too few cells");
    double width = hi - lo;
    if (width == 0.0) width = 1.0;
    const double dx = width / (m_cells - 6);
    return SpaceGrid(lo - 3.0 * dx, hi + 3.0 * dx, m_cells);
}

/// Exact per-step occupation times of the linear interpolant.
inline PathOccupancy compute_occupancy(const SamplePath& path, SpaceGrid space) {
    double lo = path.values.front(), hi = lo;
    for (double v : path.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (!space.covers(lo, hi)) space = covering_space_grid(path, std::max(space.m_cells, 7));

    PathOccupancy occ{path.grid, space, {}};
    const int n = path.grid.n_steps;
    const double dt = path.grid.dt();
    occ.steps.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double w0 = path[k], w1 = path[k + 1];
        StepOccupancy& st = occ.steps[static_cast<std::size_t>(k)];
        if (w0 == w1) {
            const int c = space.cell_of(w0);
            // a still step exactly on an interior boundary is split half-half
            // between the adjacent cells; the split commutes with reflection
            if (c > 0 && w0 < space.x_max && space.on_boundary(w0)) {
                st.first_cell = c - 1;
                st.tau.assign(2, 0.5 * dt);
            } else {
                st.first_cell = c;
                st.tau.assign(1, dt);
            }
            continue;
        }
        const double a = std::min(w0, w1), b = std::max(w0, w1);
        int c_lo = space.cell_of(a), c_hi = space.cell_of(b);
        // an endpoint exactly on a boundary would contribute a zero-width cell
        if (c_hi > c_lo && b < space.x_max && space.on_boundary(b)) --c_hi;
        st.first_cell = c_lo;
        st.tau.resize(static_cast<std::size_t>(c_hi - c_lo) + 1);
        const double scale = dt / (b - a);
        for (int c = c_lo; c <= c_hi; ++c) {
            const double seg_lo = (c == c_lo) ? a : std::max(a, space.boundary(c));
            const double seg_hi = (c == c_hi) ? b : std::min(b, space.boundary(c + 1));
            st.tau[static_cast<std::size_t>(c - c_lo)] = (seg_hi - seg_lo) * scale;
        }
    }
    return occ;
}

/// Dense cumulative local-time field: mass(t_k, cell_j) = occupation time of
/// [0, t_k] in the cell divided by the cell width.
struct LocalTimeField {
    Grid time_grid;
    SpaceGrid space_grid;
    std::vector<double> mass;  // (n_steps + 1) rows of m_cells values

    double at(int k, int j) const {
        return mass[static_cast<std::size_t>(k) * space_grid.m_cells + j];
    }
    double& at(int k, int j) {
        return mass[static_cast<std::size_t>(k) * space_grid.m_cells + j];
    }
};

inline LocalTimeField densify(const PathOccupancy& occ) {
    const int n = occ.grid.n_steps, m = occ.space.m_cells;
    LocalTimeField f{occ.grid, occ.space, {}};
    f.mass.assign(static_cast<std::size_t>(n + 1) * m, 0.0);
    const double inv_dx = 1.0 / occ.space.dx();
    for (int k = 0; k < n; ++k) {
        const StepOccupancy& st = occ.steps[static_cast<std::size_t>(k)];
        double* prev = &f.mass[static_cast<std::size_t>(k) * m];
        double* next = &f.mass[static_cast<std::size_t>(k + 1) * m];
        std::copy(prev, prev + m, next);
        for (std::size_t i = 0; i < st.tau.size(); ++i)
            next[st.first_cell + static_cast<int>(i)] += st.tau[i] * inv_dx;
    }
    return f;
}

inline LocalTimeField occupation_density(const SamplePath& path, const SpaceGrid& space) {
    return densify(compute_occupancy(path, space));
}
inline LocalTimeField occupation_density(const SamplePath& path, int m_cells = -1) {
    if (m_cells < 0) m_cells = std::max(path.grid.n_steps, 7);
    return densify(compute_occupancy(path, covering_space_grid(path, m_cells)));
}

/// |LHS - RHS| of the occupation identity at the final time: the time
/// integral of f along the path (midpoint rule between exact cell crossings,
/// exact for cell-constant and for linear f) versus the cell sum against the
/// field.
inline double occupation_formula_residual(const SamplePath& path, const LocalTimeField& field,
                                          const std::function<double(double)>& f) {
    const SpaceGrid& space = field.space_grid;
    const int n = path.grid.n_steps;
    const double dt = path.grid.dt();
    double lhs = 0.0;
    for (int k = 0; k < n; ++k) {
        const double w0 = path[k], w1 = path[k + 1];
        if (w0 == w1) {
            lhs += dt * f(w0);
            continue;
        }
        const double a = std::min(w0, w1), b = std::max(w0, w1);
        const int c_lo = space.cell_of(a), c_hi = space.cell_of(b);
        const double scale = dt / (b - a);
        for (int c = c_lo; c <= c_hi; ++c) {
            const double seg_lo = (c == c_lo) ? a : std::max(a, space.boundary(c));
            const double seg_hi = (c == c_hi) ? b : std::min(b, space.boundary(c + 1));
            lhs += (seg_hi - seg_lo) * scale * f(0.5 * (seg_lo + seg_hi));
        }
    }
    double rhs = 0.0;
    const double dx = space.dx();
    for (int j = 0; j < space.m_cells; ++j) rhs += f(space.center(j)) * field.at(n, j) * dx;
    return std::abs(lhs - rhs);
}

// ---------------------------------------------------------------------------
// Joint regularity estimation
// ---------------------------------------------------------------------------

enum class ScanMode { time, space };

struct HolderScanReport {
    ScanMode mode = ScanMode::time;
    double moment = 2.0;
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_over_moment = 0.0;
    bool degenerate = false;
    int n_fields = 0;
    std::vector<double> log_lags;
    std::vector<double> log_moments;
};

namespace detail {

/// Cell where the cumulative occupation first exceeds half the total time --
/// the spatial median of the path.
inline int median_cell(const LocalTimeField& f) {
    const int n = f.time_grid.n_steps, m = f.space_grid.m_cells;
    const double half = 0.5 * f.time_grid.t_end;
    double acc = 0.0;
    const double dx = f.space_grid.dx();
    for (int j = 0; j < m; ++j) {
        acc += f.at(n, j) * dx;
        if (acc >= half) return j;
    }
    return m - 1;
}

struct ScanAccumulator {
    ScanMode mode;
    double moment;
    std::vector<int> lags;          // in steps (time) or cells (space)
    std::vector<double> sum;        // per-lag running sum of |increment|^moment
    std::vector<long long> count;   // per-lag sample counts
    std::vector<double> first_contrib;  // per-lag first field's mean (degeneracy probe)
    bool contrib_vary = false;
    int n_fields = 0;

    ScanAccumulator(ScanMode mode_, double moment_, int n_steps, int m_cells)
        : mode(mode_), moment(moment_) {
        const int base = (mode == ScanMode::time) ? n_steps : m_cells;
        for (int sh = 8; sh >= 1; --sh) {
            const int lag = std::max(1, base >> sh);
            if (lags.empty() || lag != lags.back()) lags.push_back(lag);
        }
        if (lags.size() < 4)
            throw std::invalid_argument("holder_exponent_scan: fewer than 4 usable lag points");
        sum.assign(lags.size(), 0.0);
        count.assign(lags.size(), 0);
        first_contrib.assign(lags.size(), 0.0);
    }

    void add(const LocalTimeField& f) {
        const int n = f.time_grid.n_steps;
        const int jstar = median_cell(f);
        std::vector<double> local_mean(lags.size(), 0.0);
        std::vector<long long> local_cnt(lags.size(), 0);
        if (mode == ScanMode::time) {
            // anchors: step starts where the path charges the probe cell, so
            // the increment law is sampled at its own level
            std::vector<int> anchors;
            for (int k = 0; k < n && static_cast<int>(anchors.size()) < 512; ++k)
                if (f.at(k + 1, jstar) > f.at(k, jstar)) anchors.push_back(k);
            for (std::size_t li = 0; li < lags.size(); ++li) {
                const int lag = lags[li];
                for (int s : anchors) {
                    if (s + lag > n) continue;
                    const double inc = f.at(s + lag, jstar) - f.at(s, jstar);
                    const double v = std::pow(std::abs(inc), moment);
                    sum[li] += v;
                    ++count[li];
                    local_mean[li] += v;
                    ++local_cnt[li];
                }
            }
        } else {
            const int m = f.space_grid.m_cells;
            for (std::size_t li = 0; li < lags.size(); ++li) {
                const int lag = lags[li];
                for (int sgn : {-1, 1}) {
                    const int j2 = jstar + sgn * lag;
                    if (j2 < 0 || j2 >= m) continue;
                    const double inc = f.at(n, j2) - f.at(n, jstar);
                    const double v = std::pow(std::abs(inc), moment);
                    sum[li] += v;
                    ++count[li];
                    local_mean[li] += v;
                    ++local_cnt[li];
                }
            }
        }
        for (std::size_t li = 0; li < lags.size(); ++li)
            if (local_cnt[li] > 0) local_mean[li] /= static_cast<double>(local_cnt[li]);
        if (n_fields == 0)
            first_contrib = local_mean;
        else
            for (std::size_t li = 0; li < lags.size(); ++li)
                if (local_mean[li] != first_contrib[li]) contrib_vary = true;
        ++n_fields;
    }

    HolderScanReport finalize(double lag_unit) const {
        HolderScanReport rep;
        rep.mode = mode;
        rep.moment = moment;
        rep.n_fields = n_fields;
        for (std::size_t li = 0; li < lags.size(); ++li) {
            if (count[li] == 0) continue;
            const double mean = sum[li] / static_cast<double>(count[li]);
            if (mean <= 0.0) continue;
            rep.log_lags.push_back(std::log(lags[li] * lag_unit));
            rep.log_moments.push_back(std::log(mean));
        }
        if (rep.log_lags.size() < 4)
            throw std::invalid_argument("holder_exponent_scan: fewer than 4 usable lag points");
        rep.degenerate = (n_fields > 1 && !contrib_vary);
        LinearFit fit = linear_fit(rep.log_lags, rep.log_moments);
        rep.slope = fit.slope;
        rep.intercept = fit.intercept;
        rep.r2 = fit.r2;
        rep.slope_over_moment = fit.slope / moment;
        return rep;
    }
};

}  // namespace detail

/// Log-log regression of the empirical `moment`-th increment moment of the
/// local time against the lag. Time mode probes a fixed cell near the path
/// median (anchored at steps that charge the cell); space mode probes the
/// final-time profile around the median cell.
inline HolderScanReport holder_exponent_scan(const std::vector<LocalTimeField>& ensemble,
                                             ScanMode mode, double moment) {
    if (ensemble.empty()) throw std::invalid_argument("holder_exponent_scan: empty ensemble");
    if (!(moment >= 1.0)) throw std::invalid_argument("holder_exponent_scan: moment must be >= 1");
    const Grid& g = ensemble.front().time_grid;
    const SpaceGrid& s = ensemble.front().space_grid;
    for (const auto& f : ensemble) {
        // time mode probes each field's own median cell, so only the time
        // grids must match; space mode pools lags measured in shared cells
        if (!(f.time_grid == g))
            throw std::invalid_argument("holder_exponent_scan: mixed time grids in ensemble");
        if (mode == ScanMode::space && !(f.space_grid == s))
            throw std::invalid_argument("holder_exponent_scan: mixed space grids in ensemble");
    }
    detail::ScanAccumulator acc(mode, moment, g.n_steps, s.m_cells);
    for (const auto& f : ensemble) acc.add(f);
    return acc.finalize(mode == ScanMode::time ? g.dt() : s.dx());
}

/// Streaming variant: `source(i)` produces field i on demand, so only one
/// dense field is alive at a time.
inline HolderScanReport holder_exponent_scan_stream(
    int count, const std::function<LocalTimeField(int)>& source, ScanMode mode, double moment) {
    if (count < 1) throw std::invalid_argument("holder_exponent_scan_stream: empty ensemble");
    if (!(moment >= 1.0)) throw std::invalid_argument("holder_exponent_scan: moment must be >= 1");
    LocalTimeField first = source(0);
    detail::ScanAccumulator acc(mode, moment, first.time_grid.n_steps, first.space_grid.m_cells);
    const double lag_unit =
        (mode == ScanMode::time) ? first.time_grid.dt() : first.space_grid.dx();
    const Grid g = first.time_grid;
    const SpaceGrid s = first.space_grid;
    acc.add(first);
    for (int i = 1; i < count; ++i) {
        LocalTimeField f = source(i);
        if (!(f.time_grid == g))
            throw std::invalid_argument("holder_exponent_scan: mixed time grids in ensemble");
        if (mode == ScanMode::space && !(f.space_grid == s))
            throw std::invalid_argument("holder_exponent_scan: mixed space grids in ensemble");
        acc.add(f);
    }
    return acc.finalize(lag_unit);
}

/// Long-format CSV: t,x,L rows for every (time, cell-center) pair.
inline void write_field_csv(std::ostream& os, const LocalTimeField& f) {
    os << "t,x,L\n";
    char buf[96];
    for (int k = 0; k <= f.time_grid.n_steps; ++k)
        for (int j = 0; j < f.space_grid.m_cells; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", f.time_grid.t(k),
                          f.space_grid.center(j), f.at(k, j));
            os << buf;
        }
}

inline void write_field_csv(const std::string& file, const LocalTimeField& f) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_field_csv(os, f);
}

/// Binary layout: little-endian header (n_steps u64, t_end f64, x_min f64,
/// x_max f64, m_cells u64) then the dense mass array row by row.
inline void write_field_binary(std::ostream& os, const LocalTimeField& f) {
    detail::put_u64_le(os, static_cast<std::uint64_t>(f.time_grid.n_steps));
    detail::put_f64_le(os, f.time_grid.t_end);
    detail::put_f64_le(os, f.space_grid.x_min);
    detail::put_f64_le(os, f.space_grid.x_max);
    detail::put_u64_le(os, static_cast<std::uint64_t>(f.space_grid.m_cells));
    for (double v : f.mass) detail::put_f64_le(os, v);
}

inline void write_field_binary(const std::string& file, const LocalTimeField& f) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_field_binary(os, f);
}

inline LocalTimeField read_field_binary(std::istream& is) {
    const auto n = static_cast<int>(detail::get_u64_le(is));
    const double t_end = detail::get_f64_le(is);
    const double x_min = detail::get_f64_le(is);
    const double x_max = detail::get_f64_le(is);
    const auto m = static_cast<int>(detail::get_u64_le(is));
    LocalTimeField f{Grid(t_end, n), SpaceGrid(x_min, x_max, m), {}};
    f.mass.resize(static_cast<std::size_t>(n + 1) * m);
    for (auto& v : f.mass) v = detail::get_f64_le(is);
    return f;
}

inline LocalTimeField read_field_binary(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + file);
    return read_field_binary(is);
}

}  // namespace fbmlab
