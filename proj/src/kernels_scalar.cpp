#include "messplus/kernels.hpp"

namespace messplus::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double l0 = 0.0;
    double l1 = 0.0;
    double l2 = 0.0;
    double l3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        l0 = l0 + a[i] * b[i];
        l1 = l1 + a[i + 1] * b[i + 1];
        l2 = l2 + a[i + 2] * b[i + 2];
        l3 = l3 + a[i + 3] * b[i + 3];
    }
    double sum = (l0 + l1) + (l2 + l3);
    for (; i < n; ++i) {
        sum = sum + a[i] * b[i];
    }
    return sum;
}

void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta) {
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = z[i] - eta * (coef * x[i] + mu * z[i]);
    }
}

}  // namespace messplus::kernels::scalar
