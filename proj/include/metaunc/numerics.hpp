#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>

namespace metaunc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Numerically stable log(sum(exp(v))). Entries may be -inf; returns -inf
/// only when every entry is -inf.
inline double log_sum_exp(std::span<const double> v) {
    double m = kNegInf;
    for (double x : v) {
        if (x > m) m = x;
    }
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline double log_sum_exp(double a, double b) {
    if (a == kNegInf && b == kNegInf) return kNegInf;
    double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Streaming logsumexp accumulator for large draw loops.
class LogSumExpAcc {
public:
    void add(double x) {
        if (x == kNegInf) {
            ++n_;
            return;
        }
        if (x > max_) {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        } else {
            sum_ += std::exp(x - max_);
        }
        ++n_;
    }
    double value() const { return max_ == kNegInf ? kNegInf : max_ + std::log(sum_); }
    std::size_t count() const { return n_; }

private:
    double max_ = kNegInf;
    double sum_ = 0.0;
    std::size_t n_ = 0;
};

inline double log_normal_pdf(double x, double mu, double sd) {
    const double z = (x - mu) / sd;
    return -0.5 * std::log(2.0 * kPi) - std::log(sd) - 0.5 * z * z;
}

/// Half-normal density on x >= 0 with scale s (location 0).
inline double log_half_normal_pdf(double x, double s) {
    if (x < 0.0) return kNegInf;
    return 0.5 * std::log(2.0 / kPi) - std::log(s) - 0.5 * (x / s) * (x / s);
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Shortest decimal string that round-trips the IEEE-754 double exactly.
inline std::string format_double(double x) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

// splitmix64; used for seed derivation only, never as the sampling engine.
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent child seed for a labeled stream of a master seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
}

}  // namespace metaunc
