#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fbmlab/fbm.hpp"
#include "fbmlab/fracops.hpp"

using namespace fbmlab;

namespace {

SamplePath make_path(const Grid& g, double (*f)(double)) {
    std::vector<double> v(g.size());
    for (int k = 0; k <= g.n_steps; ++k) v[static_cast<std::size_t>(k)] = f(g.t(k));
    return SamplePath(g, std::move(v));
}

double sup_diff(const SamplePath& a, const SamplePath& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.values.size(); ++i)
        m = std::max(m, std::abs(a.values[i] - b.values[i]));
    return m;
}

}  // namespace

TEST_CASE("weighted projection annihilates constants for any exponent") {
    Grid g(1.0, 512);
    SamplePath c(g, std::vector<double>(g.size(), 3.7));
    for (double h : {0.2, -0.2, 0.5, -0.45, 1.0}) {
        CHECK(pi_tilde(h, c).sup_norm() < 1e-12);
    }
    SamplePath zero_h = pi_tilde(0.0, c);
    CHECK(zero_h.values == c.values);  // h = 0 is the identity
}

TEST_CASE("weighted projection on linear data") {
    // t^1 * t - 1 * int_0^t s^0 s ds = t^2/2, cell-exact
    Grid g(1.0, 256);
    SamplePath lin = make_path(g, [](double t) { return t; });
    SamplePath out = pi_tilde(1.0, lin);
    double err = 0;
    for (int k = 0; k <= g.n_steps; ++k)
        err = std::max(err, std::abs(out[k] - 0.5 * g.t(k) * g.t(k)));
    CHECK(err < 1e-14);
    CHECK(out[0] == 0.0);
}

TEST_CASE("singular projection guards") {
    Grid g(1.0, 32);
    SamplePath c(g, std::vector<double>(g.size(), 1.0));
    CHECK_THROWS_AS(power_weight_integral(-1.2, c), std::domain_error);
    CHECK_THROWS_AS(power_weight_integral(0.0, c), std::invalid_argument);
}

TEST_CASE("fractional integral: exactness, endpoint, semigroup") {
    Grid g(1.0, 2048);
    SamplePath ones(g, std::vector<double>(g.size(), 1.0));
    SamplePath i1 = riemann_liouville(0.25, ones);
    // I^h 1 = t^h / Gamma(1+h), exact for cell-exact quadrature on constants
    double err = 0;
    for (int k = 0; k <= g.n_steps; ++k)
        err = std::max(err, std::abs(i1[k] - std::pow(g.t(k), 0.25) / std::tgamma(1.25)));
    CHECK(err < 1e-13);

    // h = 1 reduces to the running integral of the interpolant
    SamplePath lin = make_path(g, [](double t) { return t; });
    SamplePath j1 = riemann_liouville(1.0, lin);
    double err_lin = 0;
    for (int k = 0; k <= g.n_steps; ++k)
        err_lin = std::max(err_lin, std::abs(j1[k] - 0.5 * g.t(k) * g.t(k)));
    CHECK(err_lin < 1e-14);

    // semigroup I^{1/4} I^{1/4} = I^{1/2} on smooth data, away from the origin
    SamplePath c2 = riemann_liouville(0.25, riemann_liouville(0.25, lin));
    double rel = 0;
    for (int k = g.n_steps / 10; k <= g.n_steps; ++k) {
        const double ref = std::tgamma(2.0) / std::tgamma(2.5) * std::pow(g.t(k), 1.5);
        rel = std::max(rel, std::abs(c2[k] - ref) / ref);
    }
    CHECK(rel < 1e-4);
    // constant data develops a t^{1/4} cusp; check the far endpoint instead
    SamplePath c1 = riemann_liouville(0.25, i1);
    CHECK(c1[g.n_steps] == Catch::Approx(1.0 / std::tgamma(1.5)).epsilon(1e-4));

    CHECK_THROWS_AS(riemann_liouville(0.0, ones), std::invalid_argument);
    CHECK_THROWS_AS(riemann_liouville(1.5, ones), std::invalid_argument);
}

TEST_CASE("kernel inversion roundtrip recovers the driving path") {
    Grid g(1.0, 1024);
    for (double h : {0.25, 0.3}) {
        VolterraSampler vs(g, h);
        for (std::uint64_t s = 0; s < 3; ++s) {
            PathPair pair = vs.sample(RngSeed{1234, s});
            SamplePath w2 = fbm_to_bm(pair.fbm, h);
            CHECK(sup_diff(w2, pair.bm) / pair.bm.sup_norm() < 0.02);
        }
    }
    // H = 1/2: identity
    SamplePath lin = make_path(g, [](double t) { return std::sin(3.0 * t); });
    CHECK(sup_diff(fbm_to_bm(lin, 0.5), lin) == 0.0);
}

TEST_CASE("four-term split agrees with the direct composition") {
    Grid g(1.0, 1024);
    VolterraSampler vs(g, 0.3);
    PathPair pair = vs.sample(RngSeed{77, 0});
    SamplePath a = fbm_to_bm(pair.fbm, 0.3);
    SamplePath b = fbm_to_bm_decomposed(pair.fbm, 0.3);
    CHECK(sup_diff(a, b) / a.sup_norm() < 1e-12);
}

TEST_CASE("operator is causal: restriction commutes with evaluation") {
    Grid g(1.0, 512);
    VolterraSampler vs(g, 0.3);
    PathPair pair = vs.sample(RngSeed{13, 1});
    SamplePath full = fbm_to_bm(pair.fbm, 0.3);
    Grid gh(0.5, 256);
    std::vector<double> head(pair.fbm.values.begin(), pair.fbm.values.begin() + 257);
    SamplePath restricted = fbm_to_bm(SamplePath(gh, std::move(head)), 0.3);
    double err = 0;
    for (int k = 0; k <= 256; ++k) err = std::max(err, std::abs(restricted[k] - full[k]));
    CHECK(err < 1e-12);
}

TEST_CASE("sup-norm bound ratio is stable over a smooth corpus and in T") {
    double ratio_at[3] = {0, 0, 0};
    int ti = 0;
    for (double T : {0.5, 1.0, 2.0}) {
        Grid g(T, 512);
        double maxratio = 0;
        for (int m = 1; m <= 10; ++m) {
            std::vector<double> v(g.size());
            for (int k = 0; k <= g.n_steps; ++k) {
                const double t = g.t(k);
                v[static_cast<std::size_t>(k)] =
                    std::sin(2.0 * M_PI * m * t / T) +
                    std::cos(0.5 * m + 3.0 * m * t * t / (T * T));
            }
            SamplePath f(g, std::move(v));
            maxratio = std::max(maxratio, operator_bound_ratio(f, fbm_to_bm(f, 0.3), 0.3));
        }
        CHECK(maxratio < 10.0);
        ratio_at[ti++] = maxratio;
    }
    CHECK(ratio_at[0] / ratio_at[1] == Catch::Approx(1.0).margin(0.5));
    CHECK(ratio_at[2] / ratio_at[1] == Catch::Approx(1.0).margin(0.5));
}

TEST_CASE("transformed ensemble looks Brownian") {
    Grid g(1.0, 256);
    VolterraSampler vs(g, 0.3);
    std::vector<SamplePath> ens;
    ens.reserve(200);
    for (int p = 0; p < 200; ++p)
        ens.push_back(fbm_to_bm(vs.sample(RngSeed{55, static_cast<std::uint64_t>(p)}).fbm, 0.3));
    GaussianityReport rep = gaussianity_diagnostic(ens);
    CHECK(!rep.degenerate);
    CHECK(rep.variance_slope == Catch::Approx(1.0).margin(0.1));
    CHECK(std::abs(rep.lag1_correlation) < 0.1);
    CHECK(rep.kurtosis_at_end == Catch::Approx(3.0).margin(0.6));
}
