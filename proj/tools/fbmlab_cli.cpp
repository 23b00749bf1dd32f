// fbmlab experiment harness: declarative JSON configs in, deterministic CSV
// and JSON artifacts out.
//
//   fbmlab validate --config cfg.json          check a config without running
//   fbmlab run --config cfg.json [--out DIR]   execute and write artifacts
//   fbmlab list-experiments                    show the experiment catalog
//
// Exit codes: 0 success, 2 an experiment threshold failed, 1 any other error.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fbmlab/fracops.hpp"
#include "fbmlab/solver.hpp"
#include "fbmlab/stats.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kCodeVersion = "1.0.0";

// ---------------------------------------------------------------------------
// Experiment catalog
// ---------------------------------------------------------------------------

enum class Experiment {
    sample_fbm,
    local_time,
    averaging,
    skew,
    uniqueness,
    regularity_scan,
    operator_roundtrip,
    invariant_suite,
};

struct ExperimentInfo {
    Experiment id;
    const char* name;
    const char* summary;
};

const ExperimentInfo kExperiments[] = {
    {Experiment::sample_fbm, "sample-fbm",
     "sample driver paths and probe their covariance against the closed form"},
    {Experiment::local_time, "local-time",
     "occupation densities per path plus the unit occupation-formula residual"},
    {Experiment::averaging, "averaging",
     "averaged drift field along one path; two independent routes compared"},
    {Experiment::skew, "skew",
     "skew solutions for an atom drift; drift-part monotonicity audited"},
    {Experiment::uniqueness, "uniqueness",
     "cross-mollifier-family solution distances along shared drivers"},
    {Experiment::regularity_scan, "regularity-scan",
     "moment scaling exponent of the drift component over an ensemble"},
    {Experiment::operator_roundtrip, "operator-roundtrip",
     "driver-to-Brownian operator: constants, roundtrip, route agreement"},
    {Experiment::invariant_suite, "invariant-suite",
     "cheap exact invariants across all modules in one report"},
};

const ExperimentInfo* find_experiment(const std::string& name) {
    for (const auto& e : kExperiments)
        if (name == e.name) return &e;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

struct CliConfig {
    Experiment experiment = Experiment::invariant_suite;
    std::string experiment_name = "invariant-suite";
    double hurst = 0.3;
    fbmlab::Grid grid{1.0, 1024};
    fbmlab::DriftSpec drift = fbmlab::DriftSpec::dirac(1.0);
    std::string drift_kind = "dirac";
    std::string drift_profile;  // for kind == smooth
    fbmlab::SolveMethod method = fbmlab::SolveMethod::pathbypath;
    int mollify_level = 8;
    int paths = 4;
    std::uint64_t seed = 1;
    std::uint64_t stream = 0;
    double x0 = 0.0;
    std::vector<int> levels = {8, 32, 128};
    std::vector<int> lags = {4, 8, 16, 32, 64};
    int moment = 2;
    fbmlab::WindowPolicy window{};
    double young_p = 1.0;
    double young_q = 2.5;
    double young_eta = 0.7;
    int time_stride = 0;  // 0: choose so at most ~65 time rows are emitted
    std::string out = "fbmlab-out";
    json canonical;  // parsed config incl. applied defaults, for hashing
};

struct Issue {
    std::string path;
    std::string message;
};

void expect_keys(const json& j, const std::string& where,
                 std::initializer_list<const char*> allowed, std::vector<Issue>& issues) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* k : allowed)
            if (item.key() == k) ok = true;
        if (!ok) issues.push_back({where + "." + item.key(), "unknown key"});
    }
}

bool drift_is_finite_measure(const CliConfig& c) {
    if (c.drift_kind != "smooth") return true;  // atom, gaussian, cusp, density table
    return c.drift_profile == "bump";           // the only integrable named profile
}

// Named smooth profiles usable from a text config.
std::function<double(double)> smooth_profile(const std::string& name) {
    if (name == "bump") {
        return [](double x) { return std::exp(-12.5 * x * x) / std::sqrt(2.0 * M_PI * 0.04); };
    }
    if (name == "linear") return [](double x) { return x; };
    if (name == "sine") return [](double x) { return std::sin(x); };
    return {};
}

CliConfig parse_config(const json& j, std::vector<Issue>& issues) {
    CliConfig c;
    expect_keys(j, "$",
                {"experiment", "hurst", "grid", "drift", "method", "mollify_level", "paths",
                 "seed", "stream", "x0", "levels", "lags", "moment", "window", "young",
                 "time_stride", "out"},
                issues);

    if (!j.contains("experiment") || !j["experiment"].is_string()) {
        issues.push_back({"$.experiment", "required string naming the experiment"});
    } else {
        c.experiment_name = j["experiment"].get<std::string>();
        if (const ExperimentInfo* info = find_experiment(c.experiment_name)) {
            c.experiment = info->id;
        } else {
            issues.push_back({"$.experiment", "unknown experiment '" + c.experiment_name +
                                                  "' (see list-experiments)"});
        }
    }

    c.hurst = j.value("hurst", c.hurst);
    if (!(c.hurst > 0.0 && c.hurst <= 0.5))
        issues.push_back({"$.hurst", "must lie in (0, 0.5]"});

    if (j.contains("grid")) {
        const json& g = j["grid"];
        expect_keys(g, "$.grid", {"t_end", "n_steps"}, issues);
        const double t_end = g.value("t_end", 1.0);
        const int n = g.value("n_steps", 1024);
        if (!(t_end > 0.0))
            issues.push_back({"$.grid.t_end", "must be positive"});
        else if (n < 1)
            issues.push_back({"$.grid.n_steps", "must be >= 1"});
        else
            c.grid = fbmlab::Grid(t_end, n);
    }

    if (j.contains("drift")) {
        const json& d = j["drift"];
        expect_keys(d, "$.drift",
                    {"kind", "mass", "width", "theta", "radius", "profile", "x_min", "x_max",
                     "values"},
                    issues);
        c.drift_kind = d.value("kind", "dirac");
        try {
            if (c.drift_kind == "dirac") {
                c.drift = fbmlab::DriftSpec::dirac(d.value("mass", 1.0));
            } else if (c.drift_kind == "gaussian") {
                c.drift = fbmlab::DriftSpec::gaussian(d.value("mass", 1.0), d.value("width", 0.02));
            } else if (c.drift_kind == "power_cusp") {
                c.drift =
                    fbmlab::DriftSpec::power_cusp(d.value("theta", -0.5), d.value("radius", 0.5));
            } else if (c.drift_kind == "gridded") {
                const auto vals = d.value("values", std::vector<double>{});
                fbmlab::GridField f(d.value("x_min", -1.0), d.value("x_max", 1.0),
                                    static_cast<int>(vals.size()));
                f.values = vals;
                c.drift = fbmlab::DriftSpec::gridded(std::move(f));
            } else if (c.drift_kind == "smooth") {
                c.drift_profile = d.value("profile", "");
                if (auto fn = smooth_profile(c.drift_profile))
                    c.drift = fbmlab::DriftSpec::smooth(std::move(fn));
                else
                    issues.push_back(
                        {"$.drift.profile",
                         "unknown smooth profile (available: bump, linear, sine)"});
            } else {
                issues.push_back({"$.drift.kind",
                                  "unknown kind (dirac, gaussian, power_cusp, gridded, smooth)"});
            }
        } catch (const std::exception& e) {
            issues.push_back({"$.drift", e.what()});
        }
    }

    const std::string method = j.value("method", "pathbypath");
    if (method == "mollified")
        c.method = fbmlab::SolveMethod::mollified;
    else if (method == "pathbypath")
        c.method = fbmlab::SolveMethod::pathbypath;
    else
        issues.push_back({"$.method", "must be 'mollified' or 'pathbypath'"});

    c.mollify_level = j.value("mollify_level", c.mollify_level);
    if (c.method == fbmlab::SolveMethod::mollified && c.mollify_level < 1)
        issues.push_back({"$.mollify_level", "mollified runs need a level >= 1"});

    c.paths = j.value("paths", c.paths);
    if (c.paths < 1) issues.push_back({"$.paths", "must be >= 1"});
    c.seed = j.value("seed", c.seed);
    c.stream = j.value("stream", c.stream);
    c.x0 = j.value("x0", c.x0);
    if (!std::isfinite(c.x0)) issues.push_back({"$.x0", "must be finite"});

    c.levels = j.value("levels", c.levels);
    for (std::size_t i = 0; i < c.levels.size(); ++i) {
        if (c.levels[i] < 1) issues.push_back({"$.levels", "levels must be >= 1"});
        if (i > 0 && c.levels[i] <= c.levels[i - 1])
            issues.push_back({"$.levels", "levels must increase strictly"});
    }

    c.lags = j.value("lags", c.lags);
    for (int l : c.lags)
        if (l < 1 || l > c.grid.n_steps)
            issues.push_back({"$.lags", "every lag must lie in [1, n_steps]"});
    c.moment = j.value("moment", c.moment);
    if (c.moment < 1) issues.push_back({"$.moment", "must be >= 1"});

    if (j.contains("window")) {
        const json& w = j["window"];
        expect_keys(w, "$.window", {"margin", "cells", "max_doublings"}, issues);
        c.window.margin = w.value("margin", c.window.margin);
        c.window.cells = w.value("cells", c.window.cells);
        c.window.max_doublings = w.value("max_doublings", c.window.max_doublings);
        if (!(c.window.margin > 0.0)) issues.push_back({"$.window.margin", "must be positive"});
        if (c.window.cells < 8) issues.push_back({"$.window.cells", "need at least 8 cells"});
        if (c.window.max_doublings < 0)
            issues.push_back({"$.window.max_doublings", "must be >= 0"});
    }

    if (j.contains("young")) {
        const json& y = j["young"];
        expect_keys(y, "$.young", {"p", "q", "eta"}, issues);
        c.young_p = y.value("p", c.young_p);
        c.young_q = y.value("q", c.young_q);
        c.young_eta = y.value("eta", c.young_eta);
    }
    if (!(c.young_p >= 1.0)) issues.push_back({"$.young.p", "must be >= 1"});
    if (!(c.young_q >= 1.0)) issues.push_back({"$.young.q", "must be >= 1"});
    if (!(c.young_eta > 0.0 && c.young_eta <= 1.0))
        issues.push_back({"$.young.eta", "must lie in (0, 1]"});
    const double theta = 1.0 / c.young_p + c.young_eta / c.young_q;
    if (!(theta > 1.0))
        issues.push_back({"$.young",
                          "partition-sum integrals need 1/p + eta/q > 1; got " +
                              std::to_string(theta)});

    c.time_stride = j.value("time_stride", 0);
    if (c.time_stride < 0) issues.push_back({"$.time_stride", "must be >= 0"});
    c.out = j.value("out", c.out);

    // cross-field rules per experiment
    if (c.experiment == Experiment::skew && c.drift_kind != "dirac")
        issues.push_back({"$.drift.kind", "the skew experiment is defined for an atom drift"});
    if (c.experiment == Experiment::regularity_scan && c.paths < 100)
        issues.push_back({"$.paths", "regularity scans need at least 100 paths"});
    if (c.experiment == Experiment::uniqueness && c.paths < 2)
        issues.push_back({"$.paths", "uniqueness diagnostics need at least 2 paths"});
    const bool runs_pathbypath =
        c.method == fbmlab::SolveMethod::pathbypath &&
        (c.experiment == Experiment::skew || c.experiment == Experiment::regularity_scan ||
         c.experiment == Experiment::averaging);
    if (runs_pathbypath && !drift_is_finite_measure(c))
        issues.push_back(
            {"$.drift",
             "path-by-path construction needs a finite-measure drift (dirac, gaussian, "
             "power_cusp, gridded, or the integrable smooth profile 'bump'); profile '" +
                 c.drift_profile + "' is not integrable"});

    // canonical snapshot used for hashing (includes applied defaults)
    c.canonical = j;
    c.canonical["hurst"] = c.hurst;
    c.canonical["paths"] = c.paths;
    c.canonical["seed"] = c.seed;
    c.canonical["stream"] = c.stream;
    c.canonical["grid"] = {{"t_end", c.grid.t_end}, {"n_steps", c.grid.n_steps}};
    return c;
}

// ---------------------------------------------------------------------------
// Artifacts: temp-then-rename writes, checksums, manifest
// ---------------------------------------------------------------------------

class ArtifactWriter {
  public:
    explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
        fs::create_directories(dir_);
    }

    void write(const std::string& name, const std::string& bytes) {
        const fs::path target = dir_ / name;
        const fs::path tmp = target.string() + ".tmp";
        {
            std::ofstream os(tmp, std::ios::binary);
            if (!os) throw std::runtime_error("cannot open " + tmp.string());
            os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
            if (!os) throw std::runtime_error("short write to " + tmp.string());
        }
        fs::rename(tmp, target);
        files_.emplace_back(name, fbmlab::detail::fnv1a(bytes));
    }

    const std::vector<std::pair<std::string, std::uint64_t>>& files() const { return files_; }
    const fs::path& dir() const { return dir_; }

  private:
    fs::path dir_;
    std::vector<std::pair<std::string, std::uint64_t>> files_;
};

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct RunResult {
    bool pass = true;
    std::map<std::string, double> metrics;
};

std::string csv_cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

RunResult run_sample_fbm(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    VolterraSampler sampler(c.grid, c.hurst);
    std::vector<SamplePath> paths;
    paths.reserve(static_cast<std::size_t>(c.paths));
    double max_start = 0.0;
    for (int i = 0; i < c.paths; ++i) {
        paths.push_back(sampler.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)}).fbm);
        max_start = std::max(max_start, std::abs(paths.back()[0]));
        std::ostringstream os;
        write_path_csv(os, paths.back());
        char name[32];
        std::snprintf(name, sizeof(name), "path_%05d.csv", i);
        art.write(name, os.str());
    }

    const double T = c.grid.t_end;
    const int n = c.grid.n_steps;
    const double probes[5][2] = {{0.25, 0.5}, {0.5, 0.5}, {0.25, 0.75}, {0.5, 1.0}, {0.75, 1.0}};
    std::ostringstream os;
    os << "probe,s,t,exact,empirical,abs_error\n";
    double max_err = 0.0;
    for (int p = 0; p < 5; ++p) {
        const int ks = static_cast<int>(std::lround(probes[p][0] * n));
        const int kt = static_cast<int>(std::lround(probes[p][1] * n));
        const double s = c.grid.t(ks), t = c.grid.t(kt);
        const double exact = 0.5 * (std::pow(t, 2.0 * c.hurst) + std::pow(s, 2.0 * c.hurst) -
                                    std::pow(std::abs(t - s), 2.0 * c.hurst));
        double emp = 0.0;
        for (const SamplePath& w : paths) emp += w[ks] * w[kt];
        emp /= c.paths;
        const double err = std::abs(emp - exact);
        max_err = std::max(max_err, err);
        os << p << ',' << csv_cell(s) << ',' << csv_cell(t) << ',' << csv_cell(exact) << ','
           << csv_cell(emp) << ',' << csv_cell(err) << '\n';
    }
    art.write("covariance_probes.csv", os.str());

    RunResult r;
    r.metrics["paths"] = c.paths;
    r.metrics["max_start_abs"] = max_start;
    r.metrics["max_probe_abs_error"] = max_err;
    r.metrics["t_end"] = T;
    r.pass = max_start == 0.0;
    return r;
}

RunResult run_local_time(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    VolterraSampler sampler(c.grid, c.hurst);
    std::ostringstream lt_os, res_os;
    lt_os << "path,x_mid,local_time\n";
    res_os << "path,residual\n";
    double max_residual = 0.0;
    for (int i = 0; i < c.paths; ++i) {
        const SamplePath w =
            sampler.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)}).fbm;
        const LocalTimeField lt = occupation_density(w, c.window.cells);
        const SpaceGrid& s = lt.space_grid;
        const double dx = s.dx();
        double integral = 0.0;
        for (int jcell = 0; jcell < s.m_cells; ++jcell) {
            const double val = lt.at(c.grid.n_steps, jcell);
            integral += val * dx;
            lt_os << i << ',' << csv_cell(s.boundary(jcell) + 0.5 * dx) << ',' << csv_cell(val)
                  << '\n';
        }
        const double residual = std::abs(integral - c.grid.t_end);
        max_residual = std::max(max_residual, residual);
        res_os << i << ',' << csv_cell(residual) << '\n';
    }
    art.write("localtime_long.csv", lt_os.str());
    art.write("residuals.csv", res_os.str());

    RunResult r;
    r.metrics["paths"] = c.paths;
    r.metrics["max_occupation_residual"] = max_residual;
    r.metrics["residual_bound"] = 1e-10 * c.grid.t_end;
    r.pass = max_residual <= 1e-10 * c.grid.t_end;
    return r;
}

RunResult run_averaging(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    const SamplePath w = VolterraSampler(c.grid, c.hurst).sample(RngSeed{c.seed, c.stream}).fbm;
    double half = c.window.margin;
    for (double v : w.values) half = std::max(half, std::abs(v) + c.window.margin);
    const SpaceGrid space = SpaceGrid::symmetric_dyadic(half, c.window.cells);
    const LocalTimeField lt = occupation_density(w, space);
    const AveragedField kernel = averaging_via_localtime(c.drift, lt);
    const bool two_routes = c.drift.pointwise_evaluable();

    const int stride = c.time_stride > 0 ? c.time_stride : std::max(1, c.grid.n_steps / 64);
    std::ostringstream os;
    os << "t,x_mid,route,value\n";
    RunResult r;
    if (two_routes) {
        const AveragedField direct = averaging_direct(c.drift, w, space);
        double sup_gap = 0.0, sup_field = 0.0;
        for (int k = 0; k <= c.grid.n_steps; ++k)
            for (int jcell = 0; jcell < space.m_cells; ++jcell) {
                sup_gap = std::max(sup_gap, std::abs(direct.at(k, jcell) - kernel.at(k, jcell)));
                sup_field = std::max(sup_field, std::abs(direct.at(k, jcell)));
            }
        for (int k = 0; k <= c.grid.n_steps; k += stride)
            for (int jcell = 0; jcell < space.m_cells; ++jcell) {
                const double xm = space.boundary(jcell) + 0.5 * space.dx();
                os << csv_cell(c.grid.t(k)) << ',' << csv_cell(xm) << ",direct,"
                   << csv_cell(direct.at(k, jcell)) << '\n';
                os << csv_cell(c.grid.t(k)) << ',' << csv_cell(xm) << ",kernel,"
                   << csv_cell(kernel.at(k, jcell)) << '\n';
            }
        const double rel = sup_field > 0.0 ? sup_gap / sup_field : sup_gap;
        r.metrics["sup_route_gap_rel"] = rel;
        r.metrics["sup_field"] = sup_field;
        r.pass = rel <= 1e-3;
    } else {
        double sup_field = 0.0;
        for (int k = 0; k <= c.grid.n_steps; k += stride)
            for (int jcell = 0; jcell < space.m_cells; ++jcell) {
                sup_field = std::max(sup_field, std::abs(kernel.at(k, jcell)));
                os << csv_cell(c.grid.t(k)) << ','
                   << csv_cell(space.boundary(jcell) + 0.5 * space.dx()) << ",kernel,"
                   << csv_cell(kernel.at(k, jcell)) << '\n';
            }
        r.metrics["sup_field"] = sup_field;
        r.pass = true;
    }
    art.write("field_long.csv", os.str());
    r.metrics["cells"] = space.m_cells;
    r.metrics["half_width"] = space.x_max;
    return r;
}

RunResult run_skew(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    VolterraSampler sampler(c.grid, c.hurst);
    const double a = c.drift.mass;
    std::ostringstream os;
    os << "path,t,series,value\n";
    double min_dk = 0.0, max_k_abs = 0.0;
    double max_doublings = 0.0;
    std::vector<double> k_end;
    for (int i = 0; i < c.paths; ++i) {
        const SamplePath w =
            sampler.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)}).fbm;
        const SolutionBundle b = skew_fbm(a, c.hurst, w, c.x0, c.window);
        for (int k = 0; k <= c.grid.n_steps; ++k) {
            os << i << ',' << csv_cell(c.grid.t(k)) << ",x," << csv_cell(b.x[k]) << '\n';
            os << i << ',' << csv_cell(c.grid.t(k)) << ",b," << csv_cell(b.b_path[k]) << '\n';
            os << i << ',' << csv_cell(c.grid.t(k)) << ",k," << csv_cell(b.k[k]) << '\n';
        }
        for (int k = 0; k < c.grid.n_steps; ++k) min_dk = std::min(min_dk, b.k[k + 1] - b.k[k]);
        max_k_abs = std::max(max_k_abs, b.k.sup_norm());
        max_doublings = std::max(max_doublings, double(b.diagnostics.window_doublings));
        k_end.push_back(b.k[c.grid.n_steps]);
    }
    art.write("skew_long.csv", os.str());

    RunResult r;
    r.metrics["paths"] = c.paths;
    r.metrics["mass"] = a;
    r.metrics["min_drift_increment"] = min_dk;
    r.metrics["median_k_end"] = fbmlab::median(k_end);
    r.metrics["max_window_doublings"] = max_doublings;
    const bool monotone_ok = a >= 0.0 ? min_dk >= 0.0 : true;
    const bool zero_ok = a != 0.0 || max_k_abs == 0.0;
    r.pass = monotone_ok && zero_ok;
    return r;
}

RunResult run_uniqueness(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    std::vector<RngSeed> seeds;
    for (int i = 0; i < c.paths; ++i)
        seeds.push_back(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)});
    const UniquenessReport rep = uniqueness_diagnostic(
        c.drift, c.hurst, c.grid, seeds, c.levels, heat_mollifier, odd_heat_mollifier, c.x0);

    std::ostringstream dist_os, med_os;
    dist_os << "level,path,distance\n";
    med_os << "level,median_distance\n";
    for (std::size_t li = 0; li < rep.levels.size(); ++li) {
        for (std::size_t si = 0; si < rep.distances[li].size(); ++si)
            dist_os << rep.levels[li] << ',' << si << ',' << csv_cell(rep.distances[li][si])
                    << '\n';
        med_os << rep.levels[li] << ',' << csv_cell(rep.median_distance[li]) << '\n';
    }
    art.write("distances.csv", dist_os.str());
    art.write("medians.csv", med_os.str());

    RunResult r;
    r.metrics["paths"] = c.paths;
    r.metrics["final_median"] = rep.median_distance.back();
    r.metrics["median_driver_sup"] = rep.median_driver_sup;
    r.metrics["final_over_driver"] = rep.median_distance.back() / rep.median_driver_sup;
    r.metrics["medians_decreasing"] = rep.medians_decreasing ? 1.0 : 0.0;
    r.pass = rep.medians_decreasing &&
             rep.median_distance.back() < 0.05 * rep.median_driver_sup;
    return r;
}

RunResult run_regularity_scan(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    VolterraSampler sampler(c.grid, c.hurst);
    RegularityAccumulator acc(c.grid, c.moment, c.lags);
    for (int i = 0; i < c.paths; ++i) {
        const SamplePath w =
            sampler.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)}).fbm;
        if (c.method == fbmlab::SolveMethod::pathbypath && c.drift_kind == "dirac") {
            acc.add(skew_fbm(c.drift.mass, c.hurst, w, c.x0, c.window).k);
        } else if (c.method == fbmlab::SolveMethod::pathbypath) {
            SolveConfig sc;
            sc.drift = c.drift;
            sc.hurst = c.hurst;
            sc.grid = c.grid;
            sc.x0 = c.x0;
            sc.window = c.window;
            acc.add(solve_pathbypath(sc, w).k);
        } else {
            SolveConfig sc;
            sc.drift = c.drift;
            sc.hurst = c.hurst;
            sc.grid = c.grid;
            sc.x0 = c.x0;
            sc.method = fbmlab::SolveMethod::mollified;
            sc.mollify_level = c.mollify_level;
            acc.add(solve_mollified(sc, w).k);
        }
    }
    const RegularityScan scan = acc.finish();

    std::ostringstream os;
    os << "lag,lag_dt,mean_abs_moment\n";
    for (std::size_t i = 0; i < scan.lags.size(); ++i)
        os << scan.lags[i] << ',' << csv_cell(scan.lag_dt[i]) << ','
           << csv_cell(scan.mean_abs_moment[i]) << '\n';
    art.write("moments.csv", os.str());

    RunResult r;
    r.metrics["paths"] = scan.bundle_count;
    r.metrics["moment"] = scan.moment;
    r.metrics["slope"] = scan.slope;
    r.metrics["exponent"] = scan.exponent;
    r.metrics["degenerate"] = scan.degenerate ? 1.0 : 0.0;
    r.pass = !scan.degenerate && std::isfinite(scan.exponent);
    return r;
}

RunResult run_operator_roundtrip(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    VolterraSampler sampler(c.grid, c.hurst);
    const SamplePath ones(c.grid, std::vector<double>(c.grid.size(), 1.0), PathLabel::generic);
    const double annihilation = fbm_to_bm(ones, c.hurst).sup_norm();

    std::ostringstream os;
    os << "path,metric,value\n";
    std::vector<double> roundtrips;
    double max_disagreement = 0.0;
    for (int i = 0; i < c.paths; ++i) {
        const PathPair pair =
            sampler.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)});
        const SamplePath back = fbm_to_bm(bm_to_fbm(pair.bm, c.hurst), c.hurst);
        double diff = 0.0;
        for (std::size_t k = 0; k < back.values.size(); ++k)
            diff = std::max(diff, std::abs(back.values[k] - pair.bm.values[k]));
        const double rel = diff / std::max(pair.bm.sup_norm(), 1e-300);
        roundtrips.push_back(rel);

        const SamplePath direct = fbm_to_bm(pair.fbm, c.hurst);
        const SamplePath split = fbm_to_bm_decomposed(pair.fbm, c.hurst);
        double gap = 0.0;
        for (std::size_t k = 0; k < direct.values.size(); ++k)
            gap = std::max(gap, std::abs(direct.values[k] - split.values[k]));
        const double gap_rel = gap / std::max(direct.sup_norm(), 1e-300);
        max_disagreement = std::max(max_disagreement, gap_rel);

        const double ratio = operator_bound_ratio(pair.fbm, direct, c.hurst);
        os << i << ",roundtrip_rel," << csv_cell(rel) << '\n';
        os << i << ",route_disagreement," << csv_cell(gap_rel) << '\n';
        os << i << ",bound_ratio," << csv_cell(ratio) << '\n';
    }
    art.write("roundtrip.csv", os.str());

    RunResult r;
    r.metrics["paths"] = c.paths;
    r.metrics["const_annihilation"] = annihilation;
    r.metrics["median_roundtrip_rel"] = fbmlab::median(roundtrips);
    r.metrics["max_route_disagreement"] = max_disagreement;
    r.pass = annihilation <= 1e-10 && max_disagreement <= 1e-6 &&
             fbmlab::median(roundtrips) <= 0.10;
    return r;
}

RunResult run_invariant_suite(const CliConfig& c, ArtifactWriter& art) {
    using namespace fbmlab;
    struct Row {
        std::string name;
        double value;
        double bound;
        bool ok;
    };
    std::vector<Row> rows;
    auto add = [&rows](const std::string& name, double value, double bound) {
        rows.push_back({name, value, bound, value <= bound});
    };

    Grid g(1.0, 256);
    const RngSeed base{c.seed, c.stream};

    {  // driver starts at the origin; Brownian case collapses to its own base path
        VolterraSampler s03(g, 0.3);
        double start = 0.0;
        for (int i = 0; i < 3; ++i)
            start = std::max(start,
                             std::abs(s03.sample(RngSeed{c.seed, c.stream + static_cast<std::uint64_t>(i)}).fbm[0]));
        add("driver-starts-at-zero", start, 0.0);
        const PathPair half = VolterraSampler(g, 0.5).sample(base);
        double gap = 0.0;
        for (std::size_t k = 0; k < half.fbm.values.size(); ++k)
            gap = std::max(gap, std::abs(half.fbm.values[k] - half.bm.values[k]));
        add("half-regularity-driver-is-brownian", gap, 0.0);
    }

    const SamplePath w = VolterraSampler(g, 0.3).sample(base).fbm;
    double half_width = 1.0;
    for (double v : w.values) half_width = std::max(half_width, std::abs(v) + 1.0);
    const SpaceGrid space = SpaceGrid::symmetric_dyadic(half_width, 64);

    {  // unit occupation formula and reflection symmetry of the occupation density
        const LocalTimeField lt = occupation_density(w, space);
        double integral = 0.0;
        for (int jcell = 0; jcell < space.m_cells; ++jcell)
            integral += lt.at(g.n_steps, jcell) * space.dx();
        add("occupation-formula-constant", std::abs(integral - g.t_end), 1e-10 * g.t_end);

        std::vector<double> neg(w.values.size());
        for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -w.values[k];
        const LocalTimeField ltn =
            occupation_density(SamplePath(g, std::move(neg), PathLabel::fbm), space);
        double mirror = 0.0;
        for (int jcell = 0; jcell < space.m_cells; ++jcell)
            mirror = std::max(mirror, std::abs(lt.at(g.n_steps, jcell) -
                                               ltn.at(g.n_steps, space.m_cells - 1 - jcell)));
        add("occupation-density-reflection", mirror, 0.0);
    }

    {  // one-step consistency residual vanishes for state-independent functionals
        AveragingFunctional a = AveragingFunctional::analytic(
            [](double s, double t, double) { return 1.7 * (t - s); }, c.young_p, c.young_eta);
        const SewingReport rep =
            sewing_residual(a, w, 0.0, 1.0, c.young_p, c.young_q, c.young_eta);
        add("sewing-state-independent-residual", rep.lhs, 0.0);
        add("young-exponent-margin",
            1.0 - (1.0 / c.young_p + c.young_eta / c.young_q), 0.0);
    }

    {  // solver identities: zero-mass exactness, decomposition, odd symmetry
        const SolutionBundle zero = skew_fbm(0.0, 0.3, w, 0.25);
        double gap = 0.0;
        for (int k = 0; k <= g.n_steps; ++k)
            gap = std::max(gap, std::abs(zero.x[k] - (0.25 + w[k])));
        add("skew-zero-mass-identity", gap, 0.0);

        const SolutionBundle plus = skew_fbm(1.3, 0.3, w, 0.0);
        double decomp = 0.0;
        for (int k = 0; k <= g.n_steps; ++k)
            decomp = std::max(decomp, std::abs(plus.x[k] - ((plus.config.x0 + plus.k[k]) +
                                                            plus.b_path[k])));
        add("solution-decomposition-identity", decomp, 0.0);

        std::vector<double> neg(w.values.size());
        for (std::size_t k = 0; k < neg.size(); ++k) neg[k] = -w.values[k];
        const SolutionBundle minus =
            skew_fbm(-1.3, 0.3, SamplePath(g, std::move(neg), PathLabel::fbm), 0.0);
        double odd = 0.0;
        for (int k = 0; k <= g.n_steps; ++k)
            odd = std::max(odd, std::abs(minus.x[k] + plus.x[k]));
        add("skew-antisymmetry", odd, 0.0);

        double dip = 0.0;
        for (int k = 0; k < g.n_steps; ++k)
            dip = std::min(dip, plus.k[k + 1] - plus.k[k]);
        add("skew-drift-monotone", -dip, 0.0);
    }

    {  // norm homogeneity under a power-of-two scaling is exact
        GridField f = rasterize_drift(DriftSpec::gaussian(1.0, 0.05), -2.0, 2.0, 256);
        const BesovParams par(0.5, 2.0, 2.0);
        const double base_norm = besov_norm(f, par);
        GridField f8 = f;
        for (double& v : f8.values) v *= 8.0;
        add("besov-homogeneity", std::abs(besov_norm(f8, par) - 8.0 * base_norm), 0.0);
    }

    {  // driver-to-Brownian operator annihilates constants
        const SamplePath ones(g, std::vector<double>(g.size(), 1.0), PathLabel::generic);
        add("operator-annihilates-constants", fbm_to_bm(ones, 0.3).sup_norm(), 1e-10);
    }

    std::ostringstream os;
    os << "invariant,value,bound,pass\n";
    RunResult r;
    for (const Row& row : rows) {
        os << row.name << ',' << csv_cell(row.value) << ',' << csv_cell(row.bound) << ','
           << (row.ok ? "true" : "false") << '\n';
        r.metrics[row.name] = row.value;
        if (!row.ok) r.pass = false;
    }
    art.write("invariants.csv", os.str());
    r.metrics["checks"] = static_cast<double>(rows.size());
    return r;
}

RunResult dispatch(const CliConfig& c, ArtifactWriter& art) {
    switch (c.experiment) {
        case Experiment::sample_fbm: return run_sample_fbm(c, art);
        case Experiment::local_time: return run_local_time(c, art);
        case Experiment::averaging: return run_averaging(c, art);
        case Experiment::skew: return run_skew(c, art);
        case Experiment::uniqueness: return run_uniqueness(c, art);
        case Experiment::regularity_scan: return run_regularity_scan(c, art);
        case Experiment::operator_roundtrip: return run_operator_roundtrip(c, art);
        case Experiment::invariant_suite: return run_invariant_suite(c, art);
    }
    throw std::logic_error("unreachable experiment dispatch");
}

// ---------------------------------------------------------------------------
// Harness plumbing
// ---------------------------------------------------------------------------

json load_json(const std::string& file) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("cannot open config file: " + file);
    std::ostringstream ss;
    ss << is.rdbuf();
    const std::string text = ss.str();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw std::runtime_error("config parse error at line " + std::to_string(line) +
                                 ", column " + std::to_string(col) + ": " + e.what());
    }
}

std::uint64_t config_fingerprint(const CliConfig& c) {
    return fbmlab::detail::fnv1a(c.canonical.dump());
}

fs::path resolve_out_dir(const CliConfig& c, const std::string& out_flag) {
    fs::path out = out_flag.empty() ? fs::path(c.out) : fs::path(out_flag);
    if (out.is_relative()) {
        if (const char* root = std::getenv("FBMLAB_OUT_ROOT")) out = fs::path(root) / out;
    }
    return out;
}

int cmd_validate(const std::string& config_file, std::uint64_t seed_override, bool has_override) {
    json j;
    try {
        j = load_json(config_file);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    if (has_override) j["seed"] = seed_override;
    std::vector<Issue> issues;
    const CliConfig c = parse_config(j, issues);
    if (!issues.empty()) {
        for (const Issue& issue : issues)
            std::fprintf(stderr, "error: %s: %s\n", issue.path.c_str(), issue.message.c_str());
        return 1;
    }
    std::printf("ok: experiment '%s' (hash %s)\n", c.experiment_name.c_str(),
                hex64(config_fingerprint(c)).c_str());
    std::printf("ok: hurst %.6g on [0, %.6g] with %d steps, %d path(s)\n", c.hurst, c.grid.t_end,
                c.grid.n_steps, c.paths);
    std::printf("ok: drift %s\n", fbmlab::drift_signature(c.drift).c_str());
    std::printf("ok: young exponents p=%.3g q=%.3g eta=%.3g (theta=%.4g > 1)\n", c.young_p,
                c.young_q, c.young_eta, 1.0 / c.young_p + c.young_eta / c.young_q);
    return 0;
}

int cmd_run(const std::string& config_file, const std::string& out_flag, int threads,
            std::uint64_t seed_override, bool has_override) {
    const auto t0 = std::chrono::steady_clock::now();
    json j;
    try {
        j = load_json(config_file);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    if (has_override) j["seed"] = seed_override;
    std::vector<Issue> issues;
    const CliConfig c = parse_config(j, issues);
    if (!issues.empty()) {
        for (const Issue& issue : issues)
            std::fprintf(stderr, "error: %s: %s\n", issue.path.c_str(), issue.message.c_str());
        return 1;
    }

    const fs::path out = resolve_out_dir(c, out_flag);
    const int effective_threads = 1;  // modules are single-threaded; the flag caps, never raises
    json manifest;
    manifest["config_hash"] = hex64(config_fingerprint(c));
    manifest["code_version"] = kCodeVersion;
    manifest["experiment"] = c.experiment_name;
    manifest["threads_requested"] = threads;
    manifest["threads_effective"] = effective_threads;

    try {
        ArtifactWriter art(out);
        const RunResult result = dispatch(c, art);

        json report;
        report["experiment"] = c.experiment_name;
        report["config_hash"] = hex64(config_fingerprint(c));
        report["pass"] = result.pass;
        report["metrics"] = result.metrics;
        art.write("report.json", report.dump(2) + "\n");

        json files = json::array();
        for (const auto& [name, sum] : art.files())
            files.push_back({{"name", name}, {"fnv1a", hex64(sum)}});
        manifest["files"] = files;
        manifest["metrics"] = result.metrics;
        manifest["status"] = result.pass ? "ok" : "threshold-failure";
        manifest["wall_ms"] =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        {
            const fs::path tmp = out / "manifest.json.tmp";
            std::ofstream os(tmp);
            os << manifest.dump(2) << '\n';
            os.close();
            fs::rename(tmp, out / "manifest.json");
        }
        if (!result.pass) {
            std::fprintf(stderr, "threshold failure: see %s\n",
                         (out / "report.json").string().c_str());
            return 2;
        }
        std::printf("ok: %s -> %s (%zu files)\n", c.experiment_name.c_str(),
                    out.string().c_str(), art.files().size() + 1);
        return 0;
    } catch (const std::exception& e) {
        // failed runs leave a failure manifest; completed files are never truncated
        try {
            fs::create_directories(out);
            manifest["status"] = "error";
            manifest["error"] = e.what();
            manifest["wall_ms"] =
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            const fs::path tmp = out / "manifest.json.tmp";
            std::ofstream os(tmp);
            os << manifest.dump(2) << '\n';
            os.close();
            fs::rename(tmp, out / "manifest.json");
        } catch (...) {
        }
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fbmlab experiment harness"};
    app.set_version_flag("--version", kCodeVersion);
    app.require_subcommand(1);

    std::string config_file, out_flag;
    int threads = 1;
    std::uint64_t seed_override = 0;

    CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
    validate->add_option("--config", config_file, "config file (JSON)")->required();
    CLI::Option* v_seed =
        validate->add_option("--seed-override", seed_override, "replace the config seed");

    CLI::App* run = app.add_subcommand("run", "execute an experiment and write artifacts");
    run->add_option("--config", config_file, "config file (JSON)")->required();
    run->add_option("--out", out_flag, "output directory (overrides the config)");
    run->add_option("--threads", threads, "worker cap (modules run single-threaded)")
        ->check(CLI::PositiveNumber);
    CLI::Option* r_seed =
        run->add_option("--seed-override", seed_override, "replace the config seed");

    CLI::App* list = app.add_subcommand("list-experiments", "show the experiment catalog");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (list->parsed()) {
        for (const auto& e : kExperiments) std::printf("%-20s %s\n", e.name, e.summary);
        return 0;
    }
    if (validate->parsed())
        return cmd_validate(config_file, seed_override, v_seed->count() > 0);
    if (run->parsed())
        return cmd_run(config_file, out_flag, threads, seed_override, r_seed->count() > 0);
    return 1;
}
