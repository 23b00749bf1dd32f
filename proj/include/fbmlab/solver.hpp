#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmlab/averaging.hpp"
#include "fbmlab/besov.hpp"
#include "fbmlab/errors.hpp"
#include "fbmlab/fbm.hpp"
#include "fbmlab/grid.hpp"
#include "fbmlab/localtime.hpp"
#include "fbmlab/young.hpp"

namespace fbmlab {

// ---------------------------------------------------------------------------
// End-to-end solvers for dX = b(X) dt + dB, B a fractional Brownian motion:
// the Euler-Maruyama scheme on a mollified drift, the path-by-path pipeline
// (local time -> averaged field -> nonlinear Young Euler for X - B), skew
// fractional Brownian motion, and the experiment battery on top of them.
// ---------------------------------------------------------------------------

enum class SolveMethod { mollified, pathbypath };

inline const char* to_string(SolveMethod m) {
    return m == SolveMethod::mollified ? "mollified" : "pathbypath";
}

/// Space-window policy for the path-by-path pipeline: the field is built on a
/// symmetric dyadic window covering the driver's range plus `margin` (the
/// power-of-two rounding keeps the mirror map y <-> -y exact); when the drift
/// component escapes, or the drift's support exceeds what the window can
/// represent, the window doubles, at most `max_doublings` times.
struct WindowPolicy {
    double margin = 1.0;
    int cells = 1024;
    int max_doublings = 3;
};

struct SolveConfig {
    DriftSpec drift;
    double hurst = 0.5;
    Grid grid{1.0, 1};
    double x0 = 0.0;
    SolveMethod method = SolveMethod::pathbypath;
    int mollify_level = 0;  // heat time 1/level; required >= 1 for mollified
    RngSeed seed{};
    WindowPolicy window{};
};

inline void validate(const SolveConfig& cfg) {
    check_hurst(cfg.hurst);
    if (cfg.method == SolveMethod::mollified && cfg.mollify_level < 1)
        throw std::invalid_argument("SolveConfig: mollified method needs level >= 1");
    if (!(cfg.window.margin > 0.0))
        throw std::invalid_argument("SolveConfig: window margin must be positive");
    if (cfg.window.cells < 8)
        throw std::invalid_argument("SolveConfig: window needs at least 8 cells");
    if (cfg.window.max_doublings < 0)
        throw std::invalid_argument("SolveConfig: negative doubling budget");
}

struct SolveDiagnostics {
    std::string route;  // euler-maruyama | localtime-exact | localtime-kernel | direct-quadrature
    double defect = std::numeric_limits<double>::quiet_NaN();  // drift-part integral defect
    int window_doublings = 0;
    double window_half_width = 0.0;
    int window_cells = 0;
    bool hurst_regime_warning = false;   // outside H < sqrt(2) - 1 for atom drifts
    bool hurst_quarter_boundary = false; // H = 1/4 runs are flagged, not treated specially
};

/// A solved trajectory with its decomposition: x[i] is assembled as
/// (x0 + k[i]) + b_path[i], so the identity X = X_0 + K + B holds bitwise.
struct SolutionBundle {
    SolveConfig config;
    SamplePath x;
    SamplePath b_path;
    SamplePath k;
    SolveDiagnostics diagnostics;
};

namespace detail {

inline SamplePath assemble_solution(double x0, const SamplePath& k, const SamplePath& b) {
    std::vector<double> v(k.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (x0 + k.values[i]) + b.values[i];
    return SamplePath(b.grid, std::move(v), PathLabel::solution);
}

/// Explicit Euler-Maruyama drift component along a fixed driving path:
/// K_{j+1} = K_j + b(x0 + K_j + B_j) dt.
inline SamplePath euler_maruyama_drift(const DriftSpec& b, double x0, const SamplePath& b_path) {
    if (!b.pointwise_evaluable())
        throw std::invalid_argument("euler_maruyama: drift has no pointwise values");
    const int n = b_path.grid.n_steps;
    const double dt = b_path.grid.dt();
    std::vector<double> k(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 0; j < n; ++j) {
        const double xj = (x0 + k[static_cast<std::size_t>(j)]) + b_path[j];
        k[static_cast<std::size_t>(j + 1)] = k[static_cast<std::size_t>(j)] + b.eval(xj) * dt;
    }
    return SamplePath(b_path.grid, std::move(k), PathLabel::driftpart);
}

/// Cell-resolution read of the averaged field of an atom: mass times the
/// local time of the driver at -y. Reads exactly on an interior cell
/// boundary are split between the adjacent cells — together with the dyadic
/// window this makes the mirror map (a, B, y) -> (-a, -B, -y) an exact
/// identity of the whole pipeline.
inline double atom_field_read(const LocalTimeField& lt, int k, double y) {
    const SpaceGrid& s = lt.space_grid;
    const double z = -y;
    if (z < s.x_min || z > s.x_max)
        throw window_error("atom averaging: state left the local-time window");
    const int c = s.cell_of(z);
    if (z > s.x_min && z < s.x_max && s.on_boundary(z))
        return 0.5 * (lt.at(k, c - 1) + lt.at(k, c));
    return lt.at(k, c);
}

}  // namespace detail

/// Euler-Maruyama on the drift mollified at cfg.mollify_level, along the
/// supplied driving path (the overload below samples one). The same driving
/// path across levels is the coupling the convergence experiments rely on.
inline SolutionBundle solve_mollified(const SolveConfig& cfg, const SamplePath& driving) {
    validate(cfg);
    if (cfg.method != SolveMethod::mollified)
        throw std::invalid_argument("solve_mollified: config selects another method");
    if (!(driving.grid == cfg.grid))
        throw std::invalid_argument("solve_mollified: driving path grid differs from config");
    SolutionBundle out;
    out.config = cfg;
    out.b_path = driving;
    out.k = detail::euler_maruyama_drift(mollify(cfg.drift, cfg.mollify_level), cfg.x0, driving);
    out.x = detail::assemble_solution(cfg.x0, out.k, out.b_path);
    out.diagnostics.route = "euler-maruyama";
    out.diagnostics.hurst_quarter_boundary = cfg.hurst == 0.25;
    return out;
}

inline SolutionBundle solve_mollified(const SolveConfig& cfg) {
    validate(cfg);
    return solve_mollified(cfg, VolterraSampler(cfg.grid, cfg.hurst).sample(cfg.seed).fbm);
}

/// Path-by-path construction: occupation density of the driver, the averaged
/// drift field on a symmetric dyadic window, then the forward Euler polygon
/// for the drift component Y = X - B in the nonlinear Young sense. Atom
/// drifts use the exact identity between the field and the local time (no
/// convolution); other measure variants go through the local-time kernel;
/// smooth closures are averaged by direct quadrature.
inline SolutionBundle solve_pathbypath(const SolveConfig& cfg, const SamplePath& driving) {
    validate(cfg);
    if (cfg.method != SolveMethod::pathbypath)
        throw std::invalid_argument("solve_pathbypath: config selects another method");
    if (!(driving.grid == cfg.grid))
        throw std::invalid_argument("solve_pathbypath: driving path grid differs from config");

    SolutionBundle out;
    out.config = cfg;
    out.b_path = driving;
    out.diagnostics.hurst_quarter_boundary = cfg.hurst == 0.25;
    if (cfg.drift.kind == DriftKind::dirac)
        out.diagnostics.hurst_regime_warning = !(cfg.hurst < std::sqrt(2.0) - 1.0);

    double reach = cfg.window.margin + std::abs(cfg.x0);
    for (double v : driving.values) reach = std::max(reach, std::abs(v) + cfg.window.margin);
    double half = reach;
    int doublings = 0;

    auto build_field = [&]() -> AveragingFunctional {
        const SpaceGrid space = SpaceGrid::symmetric_dyadic(half, cfg.window.cells);
        out.diagnostics.window_half_width = space.x_max;
        out.diagnostics.window_cells = space.m_cells;
        switch (cfg.drift.kind) {
            case DriftKind::dirac: {
                out.diagnostics.route = "localtime-exact";
                auto lt = std::make_shared<const LocalTimeField>(
                    occupation_density(driving, space));
                const double mass = cfg.drift.mass;
                return AveragingFunctional::analytic(
                    [lt, mass](double s, double t, double y) {
                        const int ks = lt->time_grid.index_of(s);
                        const int kt = lt->time_grid.index_of(t);
                        return mass * (detail::atom_field_read(*lt, kt, y) -
                                       detail::atom_field_read(*lt, ks, y));
                    },
                    1.0, 0.5);
            }
            case DriftKind::smooth:
                out.diagnostics.route = "direct-quadrature";
                return AveragingFunctional::tabulated(
                    averaging_direct(cfg.drift, driving, space), 1.0, 0.5);
            default:
                out.diagnostics.route = "localtime-kernel";
                return AveragingFunctional::tabulated(
                    averaging_via_localtime(cfg.drift, occupation_density(driving, space)),
                    1.0, 0.5);
        }
    };
    auto build_widening = [&]() -> AveragingFunctional {
        for (;;) {
            try {
                return build_field();
            } catch (const window_error& e) {
                if (doublings >= cfg.window.max_doublings)
                    throw divergence_error(std::string("solve_pathbypath: window exhausted: ") +
                                           e.what());
                half *= 2.0;
                ++doublings;
            }
        }
    };

    AveragingFunctional field = build_widening();
    auto rebuild = [&](double lo, double hi) {
        half = std::max({2.0 * half, std::abs(lo), std::abs(hi)});
        ++doublings;
        field = build_widening();  // keep the recorded field in sync for the defect check
        return field;
    };
    SamplePath y = nly_solve_euler(field, cfg.x0, cfg.grid, rebuild, cfg.window.max_doublings);
    out.diagnostics.window_doublings = doublings;
    // Grid-resolution defect: certifies that the recorded drift component is
    // exactly the Euler polygon of the recorded field (the atom closure only
    // admits grid times, so no sub-step refinement here).
    out.diagnostics.defect = nly_residual(field, y, 1);

    std::vector<double> kv(y.values.size());
    for (std::size_t i = 0; i < kv.size(); ++i) kv[i] = y.values[i] - cfg.x0;
    out.k = SamplePath(cfg.grid, std::move(kv), PathLabel::driftpart);
    out.x = detail::assemble_solution(cfg.x0, out.k, out.b_path);
    return out;
}

inline SolutionBundle solve_pathbypath(const SolveConfig& cfg) {
    validate(cfg);
    return solve_pathbypath(cfg, VolterraSampler(cfg.grid, cfg.hurst).sample(cfg.seed).fbm);
}

inline SolutionBundle solve(const SolveConfig& cfg) {
    return cfg.method == SolveMethod::mollified ? solve_mollified(cfg) : solve_pathbypath(cfg);
}

/// a-skew fractional Brownian motion: the path-by-path solution for the atom
/// drift a * delta_0. The overload with a driving path runs the same pipeline
/// on a supplied fBm sample (used by the coupled symmetry checks).
inline SolutionBundle skew_fbm(double a, double hurst, const SamplePath& driving, double x0 = 0.0,
                               WindowPolicy window = {}) {
    SolveConfig cfg;
    cfg.drift = DriftSpec::dirac(a);
    cfg.hurst = hurst;
    cfg.grid = driving.grid;
    cfg.x0 = x0;
    cfg.method = SolveMethod::pathbypath;
    cfg.window = window;
    return solve_pathbypath(cfg, driving);
}

inline SolutionBundle skew_fbm(double a, double hurst, const Grid& grid, RngSeed seed,
                               double x0 = 0.0, WindowPolicy window = {}) {
    check_hurst(hurst);
    return skew_fbm(a, hurst, VolterraSampler(grid, hurst).sample(seed).fbm, x0, window);
}

// ---------------------------------------------------------------------------
// Uniqueness diagnostic: two mollifier families along a shared driver
// ---------------------------------------------------------------------------

/// A mollifier schedule maps (drift, level) to the smoothed drift at that
/// level; levels increase toward the identity.
using MollifierSchedule = std::function<DriftSpec(const DriftSpec&, int)>;

inline DriftSpec heat_mollifier(const DriftSpec& b, int level) { return mollify(b, level); }

/// A second family interleaved with the first: heat smoothing at time
/// 1/(2 level + 1) — distinct from 1/level at every level.
inline DriftSpec odd_heat_mollifier(const DriftSpec& b, int level) {
    if (level < 1) throw std::invalid_argument("odd_heat_mollifier: level must be >= 1");
    return gaussian_semigroup(b, 1.0 / (2.0 * level + 1.0));
}

struct UniquenessReport {
    std::vector<int> levels;
    std::vector<std::vector<double>> distances;  // [level][seed]: sup |X_A - X_B|
    std::vector<double> median_distance;         // per level
    double median_driver_sup = 0.0;
    bool medians_decreasing = false;  // strictly, level over level
};

namespace detail {

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
        return 0.5 * (lo + hi);
    }
    return hi;
}

}  // namespace detail

/// For each seed, solves with both mollifier families at each level along the
/// SAME driving path and records the sup-distance between the two solutions.
/// Under pathwise uniqueness the distances concentrate toward zero as the
/// level grows; the report exposes the per-level distribution and medians.
inline UniquenessReport uniqueness_diagnostic(const DriftSpec& b, double hurst, const Grid& grid,
                                              const std::vector<RngSeed>& seeds,
                                              const std::vector<int>& levels,
                                              const MollifierSchedule& family_a,
                                              const MollifierSchedule& family_b,
                                              double x0 = 0.0) {
    check_hurst(hurst);
    if (seeds.empty()) throw std::invalid_argument("uniqueness_diagnostic: no seeds");
    if (levels.empty()) throw std::invalid_argument("uniqueness_diagnostic: no levels");
    for (std::size_t i = 1; i < levels.size(); ++i)
        if (levels[i] <= levels[i - 1])
            throw std::invalid_argument("uniqueness_diagnostic: levels must increase");
    if (!family_a || !family_b) throw std::invalid_argument("uniqueness_diagnostic: empty family");

    UniquenessReport rep;
    rep.levels = levels;
    rep.distances.assign(levels.size(), {});
    std::vector<std::pair<DriftSpec, DriftSpec>> pairs;
    pairs.reserve(levels.size());
    for (int lv : levels) pairs.emplace_back(family_a(b, lv), family_b(b, lv));

    VolterraSampler sampler(grid, hurst);
    std::vector<double> sups;
    sups.reserve(seeds.size());
    for (const RngSeed& seed : seeds) {
        const SamplePath driver = sampler.sample(seed).fbm;
        sups.push_back(driver.sup_norm());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            const SamplePath ka = detail::euler_maruyama_drift(pairs[i].first, x0, driver);
            const SamplePath kb = detail::euler_maruyama_drift(pairs[i].second, x0, driver);
            double d = 0.0;
            for (std::size_t j = 0; j < ka.values.size(); ++j)
                d = std::max(d, std::abs(ka.values[j] - kb.values[j]));
            rep.distances[i].push_back(d);
        }
    }
    rep.median_driver_sup = detail::median_of(sups);
    rep.median_distance.reserve(levels.size());
    for (const auto& row : rep.distances)
        rep.median_distance.push_back(detail::median_of(row));
    rep.medians_decreasing = true;
    for (std::size_t i = 1; i < rep.median_distance.size(); ++i)
        if (!(rep.median_distance[i] < rep.median_distance[i - 1])) rep.medians_decreasing = false;
    return rep;
}

// ---------------------------------------------------------------------------
// Regularity scan of the drift component
// ---------------------------------------------------------------------------

struct RegularityScan {
    int moment = 2;
    std::vector<int> lags;                // in grid steps
    std::vector<double> lag_dt;           // lag * dt
    std::vector<double> mean_abs_moment;  // E |K_{s+l} - K_s|^m, anchors averaged
    double slope = std::numeric_limits<double>::quiet_NaN();
    double exponent = std::numeric_limits<double>::quiet_NaN();  // slope / m
    int bundle_count = 0;
    bool degenerate = false;  // K constant across the whole ensemble
};

/// Streaming moment accumulator so large ensembles never need to be held in
/// memory; feed drift components (or bundles) one by one, then finish().
class RegularityAccumulator {
  public:
    RegularityAccumulator(const Grid& grid, int moment, std::vector<int> lags)
        : grid_(grid), moment_(moment), lags_(std::move(lags)) {
        if (moment_ < 1) throw std::invalid_argument("regularity scan: moment must be >= 1");
        if (lags_.empty()) throw std::invalid_argument("regularity scan: no lags");
        for (int l : lags_)
            if (l < 1 || l > grid_.n_steps)
                throw std::invalid_argument("regularity scan: lag outside the grid");
        sums_.assign(lags_.size(), 0.0);
    }

    void add(const SamplePath& k_path) {
        if (!(k_path.grid == grid_))
            throw std::invalid_argument("regularity scan: drift component on a different grid");
        for (std::size_t li = 0; li < lags_.size(); ++li) {
            const int lag = lags_[li];
            const int anchors = grid_.n_steps - lag + 1;
            double acc = 0.0;
            for (int s = 0; s < anchors; ++s) {
                const double d = k_path[s + lag] - k_path[s];
                if (d != 0.0) varies_ = true;
                acc += moment_ == 1 ? std::abs(d)
                                    : (moment_ == 2 ? d * d : std::pow(std::abs(d), moment_));
            }
            sums_[li] += acc / anchors;
        }
        ++count_;
    }

    void add(const SolutionBundle& bundle) { add(bundle.k); }

    int count() const { return count_; }

    RegularityScan finish() const {
        if (count_ < 100)
            throw std::invalid_argument("regularity scan: need at least 100 drift components");
        RegularityScan out;
        out.moment = moment_;
        out.lags = lags_;
        out.bundle_count = count_;
        out.degenerate = !varies_;
        for (std::size_t li = 0; li < lags_.size(); ++li) {
            out.lag_dt.push_back(lags_[li] * grid_.dt());
            out.mean_abs_moment.push_back(sums_[li] / count_);
        }
        if (out.degenerate) return out;  // exponent stays NaN
        double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
        const double n = static_cast<double>(lags_.size());
        for (std::size_t li = 0; li < lags_.size(); ++li) {
            const double x = std::log(out.lag_dt[li]);
            const double y = std::log(out.mean_abs_moment[li]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        out.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        out.exponent = out.slope / moment_;
        return out;
    }

  private:
    Grid grid_;
    int moment_ = 2;
    std::vector<int> lags_;
    std::vector<double> sums_;
    int count_ = 0;
    bool varies_ = false;
};

inline RegularityScan regularity_scan(const std::vector<SolutionBundle>& bundles, int moment,
                                      const std::vector<int>& lags) {
    if (bundles.empty()) throw std::invalid_argument("regularity scan: empty ensemble");
    RegularityAccumulator acc(bundles.front().k.grid, moment, lags);
    for (const SolutionBundle& b : bundles) acc.add(b);
    return acc.finish();
}

// ---------------------------------------------------------------------------
// Bundle serialization: a directory of paths plus a manifest
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t h = 14695981039346656037ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

}  // namespace detail

/// Canonical one-line description of a drift; smooth closures are described
/// by their declared regularity only (function objects have no stable bytes).
inline std::string drift_signature(const DriftSpec& b) {
    char buf[160];
    switch (b.kind) {
        case DriftKind::dirac:
            std::snprintf(buf, sizeof(buf), "dirac(mass=%.17g)", b.mass);
            break;
        case DriftKind::gaussian:
            std::snprintf(buf, sizeof(buf), "gaussian(mass=%.17g,width=%.17g)", b.mass, b.width);
            break;
        case DriftKind::power_cusp:
            std::snprintf(buf, sizeof(buf), "power_cusp(exponent=%.17g,cutoff=%.17g)", b.exponent,
                          b.cutoff);
            break;
        case DriftKind::gridded:
            std::snprintf(buf, sizeof(buf), "gridded(x_min=%.17g,x_max=%.17g,m=%d,checksum=%llx)",
                          b.field.x_min, b.field.x_max, b.field.m_points,
                          static_cast<unsigned long long>(detail::fnv1a(
                              b.field.values.data(), b.field.values.size() * sizeof(double))));
            break;
        case DriftKind::smooth:
            std::snprintf(buf, sizeof(buf), "smooth(s=%.17g,p=%.17g)", b.besov_meta.s,
                          b.besov_meta.p);
            break;
    }
    return buf;
}

inline std::uint64_t config_hash(const SolveConfig& cfg) {
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  ";hurst=%.17g;t_end=%.17g;n=%d;x0=%.17g;method=%s;level=%d;seed=%llu:%llu;"
                  "margin=%.17g;cells=%d;doublings=%d",
                  cfg.hurst, cfg.grid.t_end, cfg.grid.n_steps, cfg.x0, to_string(cfg.method),
                  cfg.mollify_level, static_cast<unsigned long long>(cfg.seed.seed),
                  static_cast<unsigned long long>(cfg.seed.stream_id), cfg.window.margin,
                  cfg.window.cells, cfg.window.max_doublings);
    return detail::fnv1a(drift_signature(cfg.drift) + buf);
}

namespace detail {

inline std::uint64_t write_atomic(const std::filesystem::path& file, const std::string& bytes,
                                  bool binary) {
    const std::filesystem::path tmp = file.string() + ".tmp";
    {
        std::ofstream os(tmp, binary ? std::ios::binary : std::ios::out);
        if (!os) throw std::runtime_error("cannot open " + tmp.string());
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw std::runtime_error("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, file);
    return fnv1a(bytes);
}

}  // namespace detail

/// Writes x/b/k as CSV (or the binary path format) plus manifest.json with
/// the config hash and per-file checksums. Files appear atomically
/// (temporary + rename), so a failed run never leaves a truncated artifact.
inline void write_bundle(const std::string& dir, const SolutionBundle& bundle,
                         bool binary = false) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const char* names[3] = {"x", "b", "k"};
    const SamplePath* paths[3] = {&bundle.x, &bundle.b_path, &bundle.k};
    std::string manifest;
    manifest += "{\n";
    char line[256];
    std::snprintf(line, sizeof(line), "  \"config_hash\": \"%016llx\",\n",
                  static_cast<unsigned long long>(config_hash(bundle.config)));
    manifest += line;
    std::snprintf(line, sizeof(line), "  \"method\": \"%s\",\n  \"route\": \"%s\",\n",
                  to_string(bundle.config.method), bundle.diagnostics.route.c_str());
    manifest += line;
    manifest += "  \"drift\": \"" + drift_signature(bundle.config.drift) + "\",\n";
    std::snprintf(line, sizeof(line),
                  "  \"hurst\": %.17g,\n  \"t_end\": %.17g,\n  \"n_steps\": %d,\n"
                  "  \"x0\": %.17g,\n  \"seed\": %llu,\n  \"stream\": %llu,\n",
                  bundle.config.hurst, bundle.config.grid.t_end, bundle.config.grid.n_steps,
                  bundle.config.x0, static_cast<unsigned long long>(bundle.config.seed.seed),
                  static_cast<unsigned long long>(bundle.config.seed.stream_id));
    manifest += line;
    std::snprintf(line, sizeof(line),
                  "  \"defect\": %.17g,\n  \"window_doublings\": %d,\n"
                  "  \"hurst_regime_warning\": %s,\n  \"files\": [\n",
                  bundle.diagnostics.defect, bundle.diagnostics.window_doublings,
                  bundle.diagnostics.hurst_regime_warning ? "true" : "false");
    manifest += line;
    for (int i = 0; i < 3; ++i) {
        const std::string name = std::string(names[i]) + (binary ? ".bin" : ".csv");
        std::ostringstream buf(std::ios::binary);
        if (binary)
            write_path_binary(buf, *paths[i], bundle.config.hurst, bundle.config.seed.seed);
        else
            write_path_csv(buf, *paths[i]);
        const std::uint64_t sum =
            detail::write_atomic(fs::path(dir) / name, buf.str(), binary);
        std::snprintf(line, sizeof(line), "    {\"name\": \"%s\", \"fnv1a\": \"%016llx\"}%s\n",
                      name.c_str(), static_cast<unsigned long long>(sum), i + 1 < 3 ? "," : "");
        manifest += line;
    }
    manifest += "  ]\n}\n";
    detail::write_atomic(fs::path(dir) / "manifest.json", manifest, false);
}

}  // namespace fbmlab
