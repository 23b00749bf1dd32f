#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fbmlab/averaging.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/grid.hpp"
#include "fbmlab/stats.hpp"

namespace fbmlab {

// ---------------------------------------------------------------------------
// Nonlinear Young integration in p-variation: two-parameter functionals
// A_{s,t}(y), partition-sum integrals, the forward Euler scheme, defect and
// stability measurements, and p-variation machinery.
// ---------------------------------------------------------------------------

/// A two-parameter family A_{s,t}(y), additive in time, eta-Hölder in y.
/// Either an analytic closure or a tabulated field (linear interpolation
/// between cell centers; increments are row differences, so additivity over
/// adjacent intervals telescopes by construction). `p` and `eta` declare the
/// regularity scale the functional is meant to live in.
struct AveragingFunctional {
    std::function<double(double, double, double)> closure;  // (s, t, y) -> A_{s,t}(y)
    std::shared_ptr<const AveragedField> table;
    double p = 1.0;
    double eta = 1.0;

    static AveragingFunctional analytic(std::function<double(double, double, double)> fn,
                                        double p_exp = 1.0, double eta_exp = 1.0) {
        if (!fn) throw std::invalid_argument("AveragingFunctional: empty closure");
        AveragingFunctional a;
        a.closure = std::move(fn);
        a.p = p_exp;
        a.eta = eta_exp;
        return a;
    }

    static AveragingFunctional tabulated(AveragedField field, double p_exp = 1.0,
                                         double eta_exp = 1.0) {
        AveragingFunctional a;
        a.table = std::make_shared<const AveragedField>(std::move(field));
        a.p = p_exp;
        a.eta = eta_exp;
        return a;
    }

    static AveragingFunctional tabulated(std::shared_ptr<const AveragedField> field,
                                         double p_exp = 1.0, double eta_exp = 1.0) {
        if (!field) throw std::invalid_argument("AveragingFunctional: null field");
        AveragingFunctional a;
        a.table = std::move(field);
        a.p = p_exp;
        a.eta = eta_exp;
        return a;
    }

    bool is_tabulated() const { return static_cast<bool>(table); }

    double eval(double s, double t, double y) const {
        if (closure) return closure(s, t, y);
        const int ks = table->time_grid.index_of(s);
        const int kt = table->time_grid.index_of(t);
        if (ks == kt) return 0.0;
        return table->interp_row(kt, y) - table->interp_row(ks, y);
    }
};

/// Exact p-variation seminorm over a grid index range [i0, i1] via the
/// best-partition dynamic program.
inline double pvar_seminorm(const SamplePath& x, double p, int i0, int i1) {
    if (i0 < 0 || i1 >= static_cast<int>(x.values.size()) || i0 > i1)
        throw std::invalid_argument("pvar_seminorm: index range out of bounds");
    return pvar_dp(i1 - i0 + 1,
                   [&](int a, int b) { return std::abs(x.values[static_cast<std::size_t>(i0 + b)] -
                                                       x.values[static_cast<std::size_t>(i0 + a)]); },
                   p);
}

inline double pvar_seminorm(const SamplePath& x, double p) {
    return pvar_seminorm(x, p, 0, static_cast<int>(x.values.size()) - 1);
}

struct NlyIntegral {
    double value = 0.0;
    std::vector<double> level_sums;    // Riemann sum per dyadic level
    std::vector<double> cauchy_trace;  // |S_{k+1} - S_k|
    bool converged = false;
};

namespace detail {

/// Dyadic sub-partition of the index range [is, it] with 2^level pieces,
/// snapped to grid indices (duplicates collapse when the grid is exhausted).
inline double partition_sum(const AveragingFunctional& A, const SamplePath& x, int is, int it,
                            int level) {
    const long len = it - is;
    const long pieces = std::min<long>(1L << level, len);
    double sum = 0.0;
    long prev = is;
    for (long j = 1; j <= pieces; ++j) {
        const long next = is + (j * len) / pieces;
        if (next == prev) continue;
        sum += A.eval(x.grid.t(static_cast<int>(prev)), x.grid.t(static_cast<int>(next)),
                      x.values[static_cast<std::size_t>(prev)]);
        prev = next;
    }
    return sum;
}

}  // namespace detail

/// Partition-sum integral of A along x over [s, t]: left-point Riemann sums
/// on dyadic sub-partitions of the grid, refined until the sums stabilize to
/// 1e-10 or the grid is exhausted. Convergence needs two consecutive stable
/// refinements — a single agreement can be a coincidence (a path revisiting
/// its start makes S_1 cancel to exactly S_0) — and the value returned is the
/// first sum of the stable run, which keeps the y-independent and
/// constant-path cases exact.
inline NlyIntegral nly_integral(const AveragingFunctional& A, const SamplePath& x, double s,
                                double t, int levels = 30) {
    if (levels < 1) throw std::invalid_argument("nly_integral: need at least one level");
    const int is = x.grid.index_of(s), it = x.grid.index_of(t);
    if (is > it) throw std::invalid_argument("nly_integral: need s <= t");
    NlyIntegral out;
    if (is == it) {
        out.converged = true;
        return out;
    }
    const long len = it - is;
    out.level_sums.push_back(detail::partition_sum(A, x, is, it, 0));
    out.value = out.level_sums.front();
    int stable_run = 0;
    for (int k = 1; k <= levels; ++k) {
        const double cur = detail::partition_sum(A, x, is, it, k);
        out.cauchy_trace.push_back(std::abs(cur - out.level_sums.back()));
        out.level_sums.push_back(cur);
        stable_run = out.cauchy_trace.back() < 1e-10 ? stable_run + 1 : 0;
        if (stable_run >= 2) {
            out.converged = true;
            out.value = out.level_sums[out.level_sums.size() - 3];
            return out;
        }
        out.value = cur;
        if ((1L << k) >= len) {  // partition already uses every grid point
            out.converged = stable_run > 0;
            break;
        }
    }
    return out;
}

namespace detail {

/// C^eta distance machinery on a fixed set of y samples: sup norm of the
/// increment plus the worst dyadic-lag Hölder quotient.
struct CetaProbe {
    std::vector<double> ys;

    static CetaProbe over(double lo, double hi, int count) {
        CetaProbe pr;
        if (!(hi > lo)) {
            pr.ys.push_back(lo);
            return pr;
        }
        for (int i = 0; i < count; ++i)
            pr.ys.push_back(lo + (hi - lo) * i / (count - 1));
        return pr;
    }

    double dist(const std::function<double(double)>& f, double eta) const {
        double sup = 0.0;
        for (double y : ys) sup = std::max(sup, std::abs(f(y)));
        if (ys.size() < 2) return sup;
        std::vector<double> vals(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) vals[i] = f(ys[i]);
        double quot = 0.0;
        const double dy = ys[1] - ys[0];
        for (std::size_t lag = 1; lag < ys.size(); lag *= 2) {
            const double denom = std::pow(lag * dy, eta);
            for (std::size_t i = 0; i + lag < ys.size(); ++i)
                quot = std::max(quot, std::abs(vals[i + lag] - vals[i]) / denom);
        }
        return sup + quot;
    }
};

/// p-variation of t -> A(., t, .) in the discrete C^eta scale over [is, it],
/// probed on time anchors and the y samples.
inline double functional_pvar_ceta(const AveragingFunctional& A, const SamplePath& x, int is,
                                   int it, double p, double eta, const CetaProbe& probe) {
    std::vector<int> anchors;
    const int stride = std::max(1, (it - is) / 32);
    for (int k = is; k <= it; k += stride) anchors.push_back(k);
    if (anchors.back() != it) anchors.push_back(it);
    const int na = static_cast<int>(anchors.size());
    std::vector<double> dmat(static_cast<std::size_t>(na) * na, 0.0);
    for (int i = 0; i < na; ++i)
        for (int j = i + 1; j < na; ++j) {
            const double ta = x.grid.t(anchors[static_cast<std::size_t>(i)]);
            const double tb = x.grid.t(anchors[static_cast<std::size_t>(j)]);
            dmat[static_cast<std::size_t>(i) * na + j] =
                probe.dist([&](double y) { return A.eval(ta, tb, y); }, eta);
        }
    return pvar_dp(
        na,
        [&](int i, int j) {
            return dmat[static_cast<std::size_t>(std::min(i, j)) * na + std::max(i, j)];
        },
        p);
}

inline std::pair<double, double> range_over(const SamplePath& x, int is, int it) {
    double lo = x.values[static_cast<std::size_t>(is)], hi = lo;
    for (int k = is; k <= it; ++k) {
        lo = std::min(lo, x.values[static_cast<std::size_t>(k)]);
        hi = std::max(hi, x.values[static_cast<std::size_t>(k)]);
    }
    return {lo, hi};
}

}  // namespace detail

struct SewingReport {
    double theta = 0.0;
    double lhs = 0.0;       // |integral - single coarse increment|
    double integral = 0.0;
    double functional_pvar = 0.0;  // [A]_{p-var} in the C^eta scale over [s,t]
    double path_qvar = 0.0;        // [x]_{q-var} over [s,t]
    double rhs = 0.0;              // functional_pvar * path_qvar^eta
    double ratio = 0.0;            // lhs / rhs, 0 when both vanish
};

/// Distance between the integral and its one-step approximation, measured
/// against the seminorm product the sewing bound predicts; the constant is
/// reported as an empirical ratio, never asserted.
inline SewingReport sewing_residual(const AveragingFunctional& A, const SamplePath& x, double s,
                                    double t, double p, double q, double eta) {
    if (!(p >= 1.0 && q >= 1.0)) throw std::invalid_argument("sewing_residual: p, q must be >= 1");
    if (!(eta > 0.0 && eta <= 1.0))
        throw std::invalid_argument("sewing_residual: eta must lie in (0, 1]");
    SewingReport rep;
    rep.theta = 1.0 / p + eta / q;
    if (!(rep.theta > 1.0))
        throw std::invalid_argument("sewing_residual: need 1/p + eta/q > 1");
    const int is = x.grid.index_of(s), it = x.grid.index_of(t);
    const NlyIntegral I = nly_integral(A, x, s, t);
    rep.integral = I.value;
    rep.lhs = std::abs(I.value - A.eval(s, t, x.values[static_cast<std::size_t>(is)]));
    const auto [lo, hi] = detail::range_over(x, is, it);
    const detail::CetaProbe probe = detail::CetaProbe::over(lo, hi, 33);
    rep.functional_pvar = detail::functional_pvar_ceta(A, x, is, it, p, eta, probe);
    rep.path_qvar = pvar_seminorm(x, q, is, it);
    rep.rhs = rep.functional_pvar * std::pow(rep.path_qvar, eta);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : (rep.lhs > 0.0 ? HUGE_VAL : 0.0);
    return rep;
}

/// Forward Euler polygon for y' = A(dt, y): y_{k+1} = y_k + A_{t_k, t_{k+1}}(y_k).
/// If the scheme escapes a tabulated window, the optional rebuild callback is
/// asked for a functional on a doubled window (restarting the sweep); after
/// `max_widenings` failures the scheme is declared divergent.
inline SamplePath nly_solve_euler(
    const AveragingFunctional& A, double y0, const Grid& grid,
    const std::function<AveragingFunctional(double, double)>& rebuild = {},
    int max_widenings = 3) {
    AveragingFunctional cur = A;
    const int n = grid.n_steps;
    std::vector<double> y(static_cast<std::size_t>(n) + 1);
    for (int attempt = 0;; ++attempt) {
        try {
            y[0] = y0;
            for (int k = 0; k < n; ++k)
                y[static_cast<std::size_t>(k + 1)] =
                    y[static_cast<std::size_t>(k)] +
                    cur.eval(grid.t(k), grid.t(k + 1), y[static_cast<std::size_t>(k)]);
            return SamplePath(grid, std::move(y), PathLabel::solution);
        } catch (const window_error&) {
            if (!rebuild || attempt >= max_widenings)
                throw divergence_error(
                    "nly_solve_euler: scheme left the functional's window" +
                    std::string(rebuild ? " after widening attempts" : " and no widening is available"));
            const double half = (attempt + 1) * std::max(1.0, std::abs(y0));
            cur = rebuild(y0 - 2.0 * half, y0 + 2.0 * half);
        }
    }
}

/// Defect of y as a solution: sup over y's grid times of
/// |y_t - y_0 - integral of A along y over [0, t]|, with the integral taken
/// on a refinement of y's grid (the tabulated functional's own grid when it
/// is finer, otherwise a dyadic split of each step) and y embedded as its
/// linear polygon.
inline double nly_residual(const AveragingFunctional& A, const SamplePath& y,
                           int refine_factor = 8) {
    if (refine_factor < 1) throw std::invalid_argument("nly_residual: refine factor must be >= 1");
    const int n = y.grid.n_steps;
    int rf = refine_factor;
    if (A.is_tabulated()) {
        const int na = A.table->time_grid.n_steps;
        if (na % n != 0 || !(std::abs(A.table->time_grid.t_end - y.grid.t_end) <=
                             1e-12 * y.grid.t_end))
            throw std::invalid_argument(
                "nly_residual: tabulated functional's grid must refine the path's grid");
        rf = na / n;
    }
    const double dt = y.grid.dt() / rf;
    double acc = 0.0, worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const double yk = y.values[static_cast<std::size_t>(k)];
        const double yk1 = y.values[static_cast<std::size_t>(k + 1)];
        for (int r = 0; r < rf; ++r) {
            const double sr = y.grid.t(k) + r * dt;
            const double yr = yk + (yk1 - yk) * (r * dt) / y.grid.dt();
            acc += A.eval(sr, sr + dt, yr);
        }
        worst = std::max(worst, std::abs(yk1 - y.values[0] - acc));
    }
    return worst;
}

struct StabilityReport {
    double delta = 0.0;
    double gap = 0.0;    // |integral along x - integral along y|
    double term_var = 0.0;   // [A] (qvar_x + qvar_y)^delta sup|x-y|^{eta-delta}
    double term_sup = 0.0;   // |A_{0,T}|_{C^eta} sup|x-y|^eta
    double bound = 0.0;
    double ratio = 0.0;
};

/// Sensitivity of the integral in the path argument, measured against the
/// two-term stability bound (variation term + endpoint C^eta term); the
/// constant is reported as an empirical ratio.
inline StabilityReport stability_gap(const AveragingFunctional& A, const SamplePath& x,
                                     const SamplePath& y, double delta, double q) {
    if (!(x.grid == y.grid)) throw std::invalid_argument("stability_gap: paths on different grids");
    if (!(q >= 1.0)) throw std::invalid_argument("stability_gap: q must be >= 1");
    const double lo_adm = q * (1.0 - 1.0 / A.p);
    if (!(delta > lo_adm && delta < A.eta))
        throw std::invalid_argument(
            "stability_gap: delta must lie in (q(1 - 1/p), eta); the window may be empty for "
            "these exponents");
    const int n = x.grid.n_steps;
    StabilityReport rep;
    rep.delta = delta;
    const double t_end = x.grid.t_end;
    rep.gap = std::abs(nly_integral(A, x, 0.0, t_end).value -
                       nly_integral(A, y, 0.0, t_end).value);
    double supdiff = 0.0, supx = 0.0, supy = 0.0;
    for (int k = 0; k <= n; ++k) {
        supdiff = std::max(supdiff, std::abs(x.values[static_cast<std::size_t>(k)] -
                                             y.values[static_cast<std::size_t>(k)]));
        supx = std::max(supx, std::abs(x.values[static_cast<std::size_t>(k)]));
        supy = std::max(supy, std::abs(y.values[static_cast<std::size_t>(k)]));
    }
    const auto [xlo, xhi] = detail::range_over(x, 0, n);
    const auto [ylo, yhi] = detail::range_over(y, 0, n);
    const detail::CetaProbe joint =
        detail::CetaProbe::over(std::min(xlo, ylo), std::max(xhi, yhi), 33);
    const double avar = detail::functional_pvar_ceta(A, x, 0, n, A.p, A.eta, joint);
    const double qx = pvar_seminorm(x, q), qy = pvar_seminorm(y, q);
    rep.term_var = avar * std::pow(qx + qy, delta) * std::pow(supdiff, A.eta - delta);
    const double radius = std::max(supx, supy);
    const detail::CetaProbe reach = detail::CetaProbe::over(-radius, radius, 33);
    const double endnorm = reach.dist([&](double z) { return A.eval(0.0, t_end, z); }, A.eta);
    rep.term_sup = endnorm * std::pow(supdiff, A.eta);
    rep.bound = rep.term_var + rep.term_sup;
    rep.ratio = rep.bound > 0.0 ? rep.gap / rep.bound : (rep.gap > 0.0 ? HUGE_VAL : 0.0);
    return rep;
}

/// Two-parameter nonnegative grid function meant to dominate increments:
/// kappa(r, u) + kappa(u, v) <= kappa(r, v) on anchor triples.
struct ControlEstimate {
    std::vector<int> anchors;
    std::vector<double> kappa;  // dense anchors x anchors, upper triangle used

    double at(int i, int j) const {
        return kappa[static_cast<std::size_t>(i) * anchors.size() + static_cast<std::size_t>(j)];
    }

    /// Largest violation of superadditivity over all anchor triples
    /// (nonpositive means the control property holds).
    double superadditivity_defect() const {
        const int na = static_cast<int>(anchors.size());
        double worst = -HUGE_VAL;
        for (int i = 0; i < na; ++i)
            for (int j = i + 1; j < na; ++j)
                for (int k = j + 1; k < na; ++k)
                    worst = std::max(worst, at(i, j) + at(j, k) - at(i, k));
        return worst;
    }
};

/// The canonical control of a discrete path: kappa(s, t) = [x]_{q-var;[s,t]}^q.
inline ControlEstimate control_from_pvar(const SamplePath& x, double q, int max_anchors = 17) {
    if (max_anchors < 3) throw std::invalid_argument("control_from_pvar: need >= 3 anchors");
    const int n = x.grid.n_steps;
    ControlEstimate ce;
    const int stride = std::max(1, n / (max_anchors - 1));
    for (int k = 0; k <= n; k += stride) ce.anchors.push_back(k);
    if (ce.anchors.back() != n) ce.anchors.push_back(n);
    const int na = static_cast<int>(ce.anchors.size());
    ce.kappa.assign(static_cast<std::size_t>(na) * na, 0.0);
    for (int i = 0; i < na; ++i)
        for (int j = i + 1; j < na; ++j)
            ce.kappa[static_cast<std::size_t>(i) * na + j] =
                std::pow(pvar_seminorm(x, q, ce.anchors[static_cast<std::size_t>(i)],
                                       ce.anchors[static_cast<std::size_t>(j)]),
                         q);
    return ce;
}

}  // namespace fbmlab
