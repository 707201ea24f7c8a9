#include "oracles.hpp"

#include <oprisk/distributions.hpp>
#include <oprisk/error.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace oprisk;

TEST_SUITE("distributions") {

TEST_CASE("density reference points") {
    CHECK(pdf(SeverityModel(Family::LogNormal, 0.0, 1.0), 1.0) == doctest::Approx(1.0 / std::sqrt(2.0 * M_PI)).epsilon(1e-15));
    CHECK(pdf(SeverityModel(Family::GPD, 0.8, 35000.0), 0.0) == doctest::Approx(1.0 / 35000.0).epsilon(1e-15));

    // Truncated density just above the threshold is the base density rescaled by the survival.
    const SeverityModel t(Family::LogNormal, 10.0, 2.0, 10000.0);
    const oracle::Dist d{oracle::Kind::LogNormal, 10.0, 2.0};
    const double x = std::nextafter(10000.0, 1e9);
    CHECK(oracle::rel(pdf(t, x), oracle::density(d, x) / oracle::survival(d, 10000.0)) < 1e-13);
    CHECK(pdf(t, 9999.0) == 0.0);
}

TEST_CASE("cdf reference points") {
    CHECK(cdf(SeverityModel(Family::GPD, 0.8, 35000.0), 0.0) == 0.0);
    CHECK(cdf(SeverityModel(Family::LogNormal, 10.0, 2.0), std::exp(10.0)) == doctest::Approx(0.5).epsilon(1e-15));
    const SeverityModel lg(Family::LogGamma, 24.0, 2.65);
    CHECK(std::abs(cdf(lg, quantile(lg, 0.999)) - 0.999) < 1e-9);
}

TEST_CASE("quantile against bisection on the closed-form cdf") {
    CHECK(quantile(SeverityModel(Family::LogNormal, 10.0, 2.0), 0.5) == doctest::Approx(22026.465794806718).epsilon(1e-14));

    const SeverityModel g(Family::GPD, 0.8, 35000.0);
    const oracle::Dist d{oracle::Kind::GPD, 0.8, 35000.0};
    const double p = 0.99997;
    const double closed = 35000.0 * (std::pow(1.0 - p, -0.8) - 1.0) / 0.8;
    const double brute = oracle::bisect_quantile([&](double x) { return 1.0 - oracle::survival(d, x); }, p, 0.0, 1e6);
    CHECK(oracle::rel(quantile(g, p), closed) < 1e-10);
    CHECK(oracle::rel(quantile(g, p), brute) < 1e-9);

    const SeverityModel tg(Family::GPD, 0.8, 25000.0, 10000.0);
    CHECK(quantile(tg, 1e-15) == doctest::Approx(10000.0).epsilon(1e-9));
}

TEST_CASE("quantile and cdf round trips across families") {
    const std::vector<SeverityModel> models{
        {Family::LogNormal, 10.0, 2.0},        {Family::LogNormal, 9.4, 2.65, 10000.0},
        {Family::LogGamma, 24.0, 2.65},        {Family::LogGamma, 23.5, 2.65, 10000.0},
        {Family::GPD, 0.8, 35000.0},           {Family::GPD, 0.91, 31000.0, 10000.0},
        {Family::Normal, 5e5, 1.5e6},
    };
    for (const auto& m : models) {
        for (double p : {1e-6, 0.01, 0.25, 0.5, 0.9, 0.999, 0.99997}) {
            CAPTURE(m.label());
            CAPTURE(p);
            const double x = quantile(m, p);
            CHECK(std::abs(cdf(m, x) - p) < 1e-9);
        }
        // Upper-tail form keeps relative precision where 1 - p underflows.
        for (double q : {1e-4, 1e-8, 1e-12}) {
            CAPTURE(m.label());
            CHECK(oracle::rel(survival(m, quantile_upper(m, q)), q) < 1e-7);
        }
    }
}

TEST_CASE("truncated quantiles against the oracle") {
    const oracle::Dist d{oracle::Kind::LogGamma, 23.5, 2.65, 10000.0};
    const SeverityModel m(Family::LogGamma, 23.5, 2.65, 10000.0);
    const double sh = oracle::survival(d, 10000.0);
    for (double p : {0.1, 0.5, 0.99, 0.9996}) CHECK(oracle::rel(quantile(m, p), oracle::x_at_survival(d, sh * (1.0 - p))) < 1e-9);
}

TEST_CASE("means") {
    CHECK(mean(SeverityModel(Family::GPD, 0.8, 35000.0)) == doctest::Approx(175000.0).epsilon(1e-14));
    CHECK(std::isinf(mean(SeverityModel(Family::GPD, 1.1, 40000.0))));
    CHECK(std::isinf(mean(SeverityModel(Family::LogGamma, 24.0, 0.9))));

    // Conditional means above H against direct quadrature.
    const double tg = mean(SeverityModel(Family::GPD, 0.8675, 50000.0, 10000.0));
    CHECK(oracle::rel(tg, oracle::truncated_mean({oracle::Kind::GPD, 0.8675, 50000.0, 10000.0})) < 1e-7);
    const double tl = mean(SeverityModel(Family::LogGamma, 34.5, 3.15, 10000.0));
    CHECK(oracle::rel(tl, oracle::truncated_mean({oracle::Kind::LogGamma, 34.5, 3.15, 10000.0})) < 1e-8);
    const double tn = mean(SeverityModel(Family::LogNormal, 10.2, 1.95, 10000.0));
    CHECK(oracle::rel(tn, oracle::truncated_mean({oracle::Kind::LogNormal, 10.2, 1.95, 10000.0})) < 1e-9);
}

TEST_CASE("both truncated-mean forms agree") {
    CHECK(oracle::rel(tloggamma_mean_gamma_cdf_form(24.0, 2.65, 10000.0), tloggamma_mean_ratio_form(24.0, 2.65, 10000.0)) < 1e-10);
    CHECK(oracle::rel(tgpd_mean_survival_form(0.8, 25000.0, 10000.0), tgpd_mean_shifted_form(0.8, 25000.0, 10000.0)) < 1e-10);
}

TEST_CASE("domain validation") {
    CHECK_THROWS_AS(SeverityModel(Family::LogNormal, 10.0, 0.0), DomainError);
    CHECK_THROWS_AS(SeverityModel(Family::GPD, -0.1, 1.0), DomainError);
    CHECK_THROWS_AS(SeverityModel(Family::LogGamma, 24.0, 2.0, 0.5), DomainError);
    CHECK_THROWS_AS(SeverityModel(Family::Normal, 0.0, 1.0, 100.0), DomainError);
    CHECK_THROWS_AS(quantile(SeverityModel(Family::LogNormal, 0.0, 1.0), 1.0), DomainError);
    CHECK_THROWS_AS(parse_family("weibull"), ConfigError);
    CHECK(parse_family("LogN") == Family::LogNormal);
    CHECK(SeverityModel(Family::GPD, 0.8, 1.0, 10.0).label() == "TGPD");
}

TEST_CASE("sampling") {
    RandomStream rng = RandomStream::keyed(7, 0, StreamPurpose::Sample);
    CHECK(sample(SeverityModel(Family::LogNormal, 10.0, 2.0), rng, 0).empty());

    const auto t = sample(SeverityModel(Family::LogNormal, 10.0, 2.0, 10000.0), rng, 100000);
    CHECK(*std::min_element(t.begin(), t.end()) > 10000.0);

    auto v = sample(SeverityModel(Family::LogNormal, 10.0, 2.0), rng, 1000000);
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    CHECK(oracle::rel(v[v.size() / 2], std::exp(10.0)) < 0.01);
}

TEST_CASE("keyed streams are reproducible and independent of draw order") {
    auto a = RandomStream::keyed(1, 5, StreamPurpose::Sample);
    auto b = RandomStream::keyed(1, 6, StreamPurpose::Sample);
    auto a2 = RandomStream::keyed(1, 5, StreamPurpose::Sample);
    const double first = a.uniform();
    b.uniform();
    CHECK(a2.uniform() == first);
    CHECK(RandomStream::keyed(1, 5, StreamPurpose::Contamination).uniform() != first);
}

TEST_CASE("poisson counts") {
    RandomStream rng = RandomStream::keyed(11, 0, StreamPurpose::Sample);
    const int draws = 100000;
    std::vector<double> n250(draws), n150(draws);
    for (int i = 0; i < draws; ++i) n250[i] = static_cast<double>(sample_poisson(FrequencyModel(25.0, 10), rng));
    for (int i = 0; i < draws; ++i) n150[i] = static_cast<double>(sample_poisson(FrequencyModel(15.0, 10), rng));
    const double m250 = std::accumulate(n250.begin(), n250.end(), 0.0) / draws;
    const double m150 = std::accumulate(n150.begin(), n150.end(), 0.0) / draws;
    double v150 = 0.0;
    for (double x : n150) v150 += (x - m150) * (x - m150);
    v150 /= draws - 1;
    CHECK(std::abs(m250 - 250.0) < 0.3);
    CHECK(std::abs(v150 / 150.0 - 1.0) < 0.03);

    for (int i = 0; i < 1000; ++i) CHECK(sample_poisson(FrequencyModel(1e-12, 1), rng) == 0);
    CHECK_THROWS_AS(FrequencyModel(-1.0, 10), DomainError);
    CHECK_THROWS_AS(FrequencyModel(25.0, 0), DomainError);
}

}
