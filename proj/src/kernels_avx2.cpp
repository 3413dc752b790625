// Built with -mavx2 (and without -mfma); only reached after a CPUID check.
#include <immintrin.h>

#include <cstddef>

namespace messplus::kernels::avx2 {

double dot(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d va = _mm256_loadu_pd(a + i);
        const __m256d vb = _mm256_loadu_pd(b + i);
        acc = _mm256_add_pd(acc, _mm256_mul_pd(va, vb));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (; i < n; ++i) {
        sum = sum + a[i] * b[i];
    }
    return sum;
}

void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta) {
    const __m256d vcoef = _mm256_set1_pd(coef);
    const __m256d vmu = _mm256_set1_pd(mu);
    const __m256d veta = _mm256_set1_pd(eta);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vz = _mm256_loadu_pd(z + i);
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d grad = _mm256_add_pd(_mm256_mul_pd(vcoef, vx), _mm256_mul_pd(vmu, vz));
        _mm256_storeu_pd(z + i, _mm256_sub_pd(vz, _mm256_mul_pd(veta, grad)));
    }
    for (; i < n; ++i) {
        z[i] = z[i] - eta * (coef * x[i] + mu * z[i]);
    }
}

}  // namespace messplus::kernels::avx2
