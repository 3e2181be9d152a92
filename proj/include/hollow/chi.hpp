#pragma once

#include <cmath>
#include <stdexcept>

namespace hollow {

struct ChiMoments {
    double mean = 0.0;
    double variance = 0.0;
};

// Moments of the Euclidean length of a k-dimensional N(0, eps0^2 I) vector.
// Above k = 300 the gamma ratio is replaced by its asymptotic series in 1/k,
// which also avoids the cancellation in k - mean^2.
inline ChiMoments chi_moments(double k, double eps0 = 1.0) {
    if (!(k >= 1.0)) throw std::invalid_argument("chi_moments: k must be >= 1");
    if (!(eps0 >= 0.0)) throw std::invalid_argument("chi_moments: eps0 must be >= 0");
    ChiMoments out;
    if (k > 300.0) {
        const double x = 1.0 / k;
        const double ratio = 1.0 - x / 4.0 + x * x / 32.0 + 5.0 * x * x * x / 128.0
                             - 21.0 * x * x * x * x / 2048.0;
        out.mean = std::sqrt(k) * ratio;
        out.variance = 0.5 - x / 8.0 - x * x / 16.0 + 5.0 * x * x * x / 128.0;
    } else {
        out.mean = std::sqrt(2.0) * std::exp(std::lgamma((k + 1.0) / 2.0) - std::lgamma(k / 2.0));
        out.variance = k - out.mean * out.mean;
    }
    out.mean *= eps0;
    out.variance *= eps0 * eps0;
    return out;
}

}  // namespace hollow
