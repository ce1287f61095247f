// Local linear fit through the 2x2 normal equations (Cramer's rule in long
// double), independent of the centred two-pass production estimator.
#pragma once

#include <cmath>
#include <vector>

namespace oracle {

struct Ols {
    double intercept, slope, residual_variance, se_intercept;
};

inline Ols normal_equations(const std::vector<double>& x, const std::vector<double>& y) {
    long double n = static_cast<long double>(x.size()), sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sy += y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double det = n * sxx - sx * sx;
    const long double a = (sy * sxx - sx * sxy) / det;
    const long double b = (n * sxy - sx * sy) / det;
    long double rss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const long double e = y[i] - (a + b * x[i]);
        rss += e * e;
    }
    const long double s2 = rss / (n - 2);
    return {static_cast<double>(a), static_cast<double>(b), static_cast<double>(s2),
            static_cast<double>(std::sqrt(s2 * sxx / det))};
}

}  // namespace oracle
