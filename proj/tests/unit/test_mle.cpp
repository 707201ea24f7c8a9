#include "oracles.hpp"

#include <oprisk/error.hpp>
#include <oprisk/mle.hpp>
#include <oprisk/warnings.hpp>

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace oprisk;

namespace {

std::vector<double> draw(const SeverityModel& m, std::size_t n, std::uint64_t seed) {
    RandomStream rng = RandomStream::keyed(seed, 0, StreamPurpose::Sample);
    return sample(m, rng, n);
}

// Fitted point should beat every nearby point on the same sample.
void check_local_max(const FitResult& fit, std::span<const double> x) {
    const double l0 = log_likelihood(fit.model, x);
    for (double d1 : {-1e-3, 0.0, 1e-3})
        for (double d2 : {-1e-3, 0.0, 1e-3}) {
            if (d1 == 0.0 && d2 == 0.0) continue;
            const double p1 = fit.model.p1() * (1.0 + d1) + (fit.model.p1() == 0.0 ? d1 : 0.0);
            const double p2 = fit.model.p2() * (1.0 + d2);
            if (!params_in_domain(fit.model.family(), p1, p2)) continue;
            CHECK(log_likelihood(fit.model.with_params(p1, p2), x) <= l0 + 1e-9 * std::abs(l0));
        }
}

} // namespace

TEST_SUITE("mle") {

TEST_CASE("simplex finds the minimum of a shifted quadratic") {
    auto f = [](const Point2& p) { return (p[0] - 3.0) * (p[0] - 3.0) + 10.0 * (p[1] + 1.0) * (p[1] + 1.0) + p[0] * p[1]; };
    const auto r = minimize_simplex(f, {0.0, 0.0}, {1.0, 1.0});
    // Stationary point of the quadratic: 2(x-3) + y = 0, 20(y+1) + x = 0.
    const double y = (-20.0 - 3.0) / (20.0 - 0.5), x = 3.0 - y / 2.0;
    CHECK(r.converged);
    CHECK(r.x[0] == doctest::Approx(x).epsilon(1e-6));
    CHECK(r.x[1] == doctest::Approx(y).epsilon(1e-6));
}

TEST_CASE("log-likelihood matches the textbook densities") {
    const auto x = draw(SeverityModel(Family::GPD, 0.9, 30000.0, 10000.0), 500, 3);
    const oracle::Dist d{oracle::Kind::GPD, 0.9, 30000.0, 10000.0};
    double ref = 0.0;
    for (double v : x) ref += std::log(oracle::density(d, v) / oracle::survival(d, 10000.0));
    CHECK(oracle::rel(log_likelihood(SeverityModel(Family::GPD, 0.9, 30000.0, 10000.0), x), ref) < 1e-12);
    CHECK(std::isinf(log_likelihood(SeverityModel(Family::GPD, 0.9, 30000.0, 20000.0), x)));
}

TEST_CASE("lognormal fit equals the closed-form estimator") {
    const auto x = draw(SeverityModel(Family::LogNormal, 10.0, 2.0), 100000, 1);
    double s = 0.0, ss = 0.0;
    for (double v : x) s += std::log(v);
    const double mu = s / x.size();
    for (double v : x) ss += (std::log(v) - mu) * (std::log(v) - mu);
    const double sigma = std::sqrt(ss / x.size());

    const auto fit = fit_severity(x, Family::LogNormal);
    CHECK(fit.converged);
    CHECK(fit.model.p1() == doctest::Approx(mu).epsilon(1e-7));
    CHECK(fit.model.p2() == doctest::Approx(sigma).epsilon(1e-7));
    CHECK(std::abs(fit.model.p1() - 10.0) < 0.02);
    CHECK(std::abs(fit.model.p2() - 2.0) < 0.01);
}

TEST_CASE("every family recovers its parameters and sits at a local maximum") {
    const std::vector<SeverityModel> truths{
        {Family::LogNormal, 9.4, 2.65, 10000.0}, {Family::LogGamma, 24.0, 2.65}, {Family::LogGamma, 33.0, 3.3, 10000.0},
        {Family::GPD, 0.8, 35000.0},             {Family::GPD, 0.91, 31000.0, 10000.0}, {Family::Normal, 5e5, 1.5e6},
    };
    for (const auto& t : truths) {
        CAPTURE(t.label());
        const auto x = draw(t, 20000, 5);
        const auto fit = fit_severity(x, t.family(), t.threshold());
        CHECK(fit.converged);
        CHECK(fit.n == x.size());
        CHECK(std::abs(fit.model.p1() / t.p1() - 1.0) < 0.12);
        CHECK(std::abs(fit.model.p2() / t.p2() - 1.0) < 0.12);
        check_local_max(fit, x);
    }
}

TEST_CASE("small gpd sample fits near the truth") {
    const auto x = draw(SeverityModel(Family::GPD, 0.8, 35000.0), 250, 9);
    const auto fit = fit_severity(x, Family::GPD);
    CHECK(fit.converged);
    CHECK(std::abs(fit.model.p1() - 0.8) < 0.35);
    CHECK(std::abs(fit.model.p2() / 35000.0 - 1.0) < 0.4);
}

TEST_CASE("input validation") {
    const std::vector<double> tiny{5.0, 6.0};
    CHECK_THROWS_AS(fit_severity(tiny, Family::LogNormal, 10000.0), DataError);
    std::vector<double> below(20, 20000.0);
    below[3] = 5000.0;
    below[4] = 30000.0;
    CHECK_THROWS_AS(fit_severity(below, Family::GPD, 10000.0), DataError);
    std::vector<double> same(30, 42.0);
    CHECK_THROWS_AS(fit_severity(same, Family::LogNormal), DataError);
    std::vector<double> lg(30, 5.0);
    lg[0] = 0.5;
    lg[1] = 7.0;
    CHECK_THROWS_AS(fit_severity(lg, Family::LogGamma), DataError);
    auto ok = draw(SeverityModel(Family::LogNormal, 10.0, 2.0), 50, 2);
    ok[7] = -1.0;
    CHECK_THROWS_AS(fit_severity(ok, Family::LogNormal), DataError);
}

TEST_CASE("poisson frequency") {
    CHECK(fit_poisson(250, 10).lambda == 25.0);
    CHECK(fit_poisson(150, 10).lambda == 15.0);
    WarningCapture warnings;
    const auto z = fit_poisson(0, 10);
    CHECK(z.lambda == 0.0);
    REQUIRE(warnings.messages().size() == 1);
    CHECK_THROWS_AS(fit_poisson(-1, 10), DataError);
}

}
