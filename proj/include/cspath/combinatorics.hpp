#pragma once

#include <complex>

namespace cspath {

inline double binomial(unsigned n, unsigned k) {
    if (k > n) return 0.0;
    double r = 1.0;
    for (unsigned i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

inline double factorial(unsigned n) {
    double r = 1.0;
    for (unsigned i = 2; i <= n; ++i) r *= static_cast<double>(i);
    return r;
}

// Repeated multiplication, so integer powers of exact values stay exact.
template <class T>
T ipow(T x, unsigned n) {
    T r(1);
    for (unsigned i = 0; i < n; ++i) r *= x;
    return r;
}

}  // namespace cspath
