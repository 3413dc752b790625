// AArch64 only. Two float64x2 accumulators hold lanes {0,1} and {2,3}.
#include <arm_neon.h>

#include <cstddef>

namespace messplus::kernels::neon {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc01 = vdupq_n_f64(0.0);
    float64x2_t acc23 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc01 = vaddq_f64(acc01, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
        acc23 = vaddq_f64(acc23, vmulq_f64(vld1q_f64(a + i + 2), vld1q_f64(b + i + 2)));
    }
    double sum = (vgetq_lane_f64(acc01, 0) + vgetq_lane_f64(acc01, 1)) +
                 (vgetq_lane_f64(acc23, 0) + vgetq_lane_f64(acc23, 1));
    for (; i < n; ++i) {
        sum = sum + a[i] * b[i];
    }
    return sum;
}

void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta) {
    const float64x2_t vcoef = vdupq_n_f64(coef);
    const float64x2_t vmu = vdupq_n_f64(mu);
    const float64x2_t veta = vdupq_n_f64(eta);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vz = vld1q_f64(z + i);
        const float64x2_t vx = vld1q_f64(x + i);
        const float64x2_t grad = vaddq_f64(vmulq_f64(vcoef, vx), vmulq_f64(vmu, vz));
        vst1q_f64(z + i, vsubq_f64(vz, vmulq_f64(veta, grad)));
    }
    for (; i < n; ++i) {
        z[i] = z[i] - eta * (coef * x[i] + mu * z[i]);
    }
}

}  // namespace messplus::kernels::neon
