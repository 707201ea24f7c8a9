#pragma once

#include <oprisk/distributions.hpp>

#include <cstddef>

namespace oprisk {

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct SymMatrix2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double det() const noexcept { return xx * yy - xy * xy; }
    bool positive_definite() const noexcept { return xx > 0.0 && yy > 0.0 && det() > 0.0; }
    SymMatrix2 inverse() const; // throws NumericError when singular
    SymMatrix2 scaled(double s) const noexcept { return {xx * s, xy * s, yy * s}; }
    double correlation() const noexcept;

    // Quadratic form v' M v.
    double quad(double v1, double v2) const noexcept { return xx * v1 * v1 + 2.0 * xy * v1 * v2 + yy * v2 * v2; }
};

enum class FisherMethod { ClosedForm, Approximation, Quadrature };

/// Per-observation Fisher information and its inverse (the asymptotic covariance kernel).
struct FisherMatrix {
    SymMatrix2 info;
    SymMatrix2 inverse;
    std::size_t n_eff = 1;
    FisherMethod method = FisherMethod::ClosedForm;

    static FisherMatrix from_info(const SymMatrix2& info, FisherMethod method);
    static FisherMatrix from_inverse(const SymMatrix2& inverse, FisherMethod method);
};

FisherMatrix fisher_lognormal(double sigma);
FisherMatrix fisher_tlognormal(double mu, double sigma, double threshold);
FisherMatrix fisher_gpd(double xi, double theta);
FisherMatrix fisher_tgpd(double xi, double theta, double threshold);
FisherMatrix fisher_loggamma(double a, double b);

// Truncated LogGamma by adaptive quadrature over the truncated region (log-loss variable).
FisherMatrix fisher_tloggamma_numeric(double a, double b, double threshold);

// Truncated LogGamma from regularized incomplete gammas only, splitting the repeated
// hypergeometric parameters by +/- eta. Throws NumericError if the result is not
// positive definite; fisher_tloggamma_numeric is the fallback.
FisherMatrix fisher_tloggamma_approx(double a, double b, double threshold, double eta = 1e-3);

/// Dispatch on the model's family. For the truncated LogGamma the analytic approximation
/// is tried first and quadrature is used if it fails (method records which one ran).
/// Normal uses the same diagonal kernel as LogNormal.
FisherMatrix fisher_information(const SeverityModel& m);

/// Asymptotic covariance of the parameter estimates from n observations.
struct ParamCovariance {
    SymMatrix2 cov;
    double sd1 = 0.0;
    double sd2 = 0.0;
    double rho = 0.0;
};

ParamCovariance param_covariance(const FisherMatrix& fm, std::size_t n);

} // namespace oprisk
