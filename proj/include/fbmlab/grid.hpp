#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmlab {

/// Uniform time grid t_k = k * t_end / n_steps, k = 0..n_steps.
struct Grid {
    double t_end = 1.0;
    int n_steps = 1;

    Grid() = default;
    Grid(double t_end_, int n_steps_) : t_end(t_end_), n_steps(n_steps_) {
        if (!(t_end > 0.0)) throw std::invalid_argument("Grid: t_end must be positive");
        if (n_steps < 1) throw std::invalid_argument("Grid: n_steps must be >= 1");
    }

    double dt() const { return t_end / n_steps; }
    double t(int k) const { return k * t_end / n_steps; }
    std::size_t size() const { return static_cast<std::size_t>(n_steps) + 1; }

    /// Index of a grid time; throws if `time` is not a grid point (tolerance dt*1e-9).
    int index_of(double time) const {
        double x = time / dt();
        int k = static_cast<int>(std::lround(x));
        if (k < 0 || k > n_steps || std::abs(x - k) > 1e-9)
            throw std::domain_error("Grid: time is not a grid point");
        return k;
    }

    bool operator==(const Grid& o) const { return t_end == o.t_end && n_steps == o.n_steps; }
};

enum class PathLabel { fbm, bm, solution, driftpart, generic };

inline const char* to_string(PathLabel l) {
    switch (l) {
        case PathLabel::fbm: return "fbm";
        case PathLabel::bm: return "bm";
        case PathLabel::solution: return "solution";
        case PathLabel::driftpart: return "driftpart";
        default: return "generic";
    }
}

/// Values sampled on a time grid; values.size() == grid.size().
struct SamplePath {
    Grid grid;
    std::vector<double> values;
    PathLabel label = PathLabel::generic;

    SamplePath() = default;
    SamplePath(Grid g, std::vector<double> v, PathLabel l = PathLabel::generic)
        : grid(g), values(std::move(v)), label(l) {
        if (values.size() != grid.size())
            throw std::invalid_argument("SamplePath: values.size() != grid.size()");
    }

    double operator[](int k) const { return values[static_cast<std::size_t>(k)]; }
    double& operator[](int k) { return values[static_cast<std::size_t>(k)]; }
    double sup_norm() const {
        double m = 0.0;
        for (double v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

/// Seed plus substream id; identical (seed, stream_id) reproduce identical draws.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    RngSeed derive(std::uint64_t stream) const { return RngSeed{seed, stream}; }

    std::mt19937_64 engine() const {
        std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                          static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream_id & 0xffffffffu),
                          static_cast<std::uint32_t>(stream_id >> 32)};
        return std::mt19937_64(seq);
    }
};

/// Coupled driving pair: fbm.values is the Volterra transform of bm increments.
struct PathPair {
    SamplePath bm;
    SamplePath fbm;
    double hurst = 0.5;
};

// ---------------------------------------------------------------------------
// Serialization. CSV: header "t,value". Binary: little-endian, header
// (n_steps u64, t_end f64, hurst f64, seed u64) then n_steps+1 f64 values.
// ---------------------------------------------------------------------------

namespace detail {

inline void put_u64_le(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_f64_le(std::ostream& os, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    put_u64_le(os, v);
}

inline std::uint64_t get_u64_le(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("binary path: truncated stream");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double get_f64_le(std::istream& is) {
    std::uint64_t v = get_u64_le(is);
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

}  // namespace detail

inline void write_path_csv(std::ostream& os, const SamplePath& p) {
    os << "t,value\n";
    char buf[64];
    for (int k = 0; k <= p.grid.n_steps; ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", p.grid.t(k), p[k]);
        os << buf;
    }
}

inline void write_path_csv(const std::string& file, const SamplePath& p) {
    std::ofstream os(file);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_path_csv(os, p);
}

inline void write_path_binary(std::ostream& os, const SamplePath& p, double hurst,
                              std::uint64_t seed) {
    detail::put_u64_le(os, static_cast<std::uint64_t>(p.grid.n_steps));
    detail::put_f64_le(os, p.grid.t_end);
    detail::put_f64_le(os, hurst);
    detail::put_u64_le(os, seed);
    for (double v : p.values) detail::put_f64_le(os, v);
}

inline void write_path_binary(const std::string& file, const SamplePath& p, double hurst,
                              std::uint64_t seed) {
    std::ofstream os(file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + file);
    write_path_binary(os, p, hurst, seed);
}

struct BinaryPathRecord {
    SamplePath path;
    double hurst = 0.5;
    std::uint64_t seed = 0;
};

inline BinaryPathRecord read_path_binary(std::istream& is) {
    BinaryPathRecord rec;
    auto n = static_cast<int>(detail::get_u64_le(is));
    double t_end = detail::get_f64_le(is);
    rec.hurst = detail::get_f64_le(is);
    rec.seed = detail::get_u64_le(is);
    Grid g(t_end, n);
    std::vector<double> vals(g.size());
    for (auto& v : vals) v = detail::get_f64_le(is);
    rec.path = SamplePath(g, std::move(vals));
    return rec;
}

inline BinaryPathRecord read_path_binary(const std::string& file) {
    std::ifstream is(file, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + file);
    return read_path_binary(is);
}

}  // namespace fbmlab
