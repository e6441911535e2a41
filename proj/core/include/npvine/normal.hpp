#pragma once

namespace npvine {

inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kLogSqrt2Pi = 0.918938533204672741780329736406;

/// Standard normal density.
double std_normal_pdf(double x) noexcept;

double std_normal_log_pdf(double x) noexcept;

/// Standard normal cdf; accepts +-infinity.
double std_normal_cdf(double x) noexcept;

/// Inverse of std_normal_cdf. Throws Error(domain) unless 0 < p < 1.
double std_normal_quantile(double p);

}  // namespace npvine
