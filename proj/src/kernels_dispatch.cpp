#include <atomic>
#include <cstdlib>
#include <string>

#include "messplus/core.hpp"
#include "messplus/kernels.hpp"

namespace messplus::kernels {

#if defined(MESSPLUS_HAVE_AVX2_KERNELS)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta);
}  // namespace avx2
#endif

#if defined(MESSPLUS_HAVE_NEON_KERNELS)
namespace neon {
double dot(const double* a, const double* b, std::size_t n);
void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta);
}  // namespace neon
#endif

namespace {

constexpr KernelTable kScalarTable{Isa::scalar, &scalar::dot, &scalar::sgd_row};
#if defined(MESSPLUS_HAVE_AVX2_KERNELS)
constexpr KernelTable kAvx2Table{Isa::avx2, &avx2::dot, &avx2::sgd_row};
#endif
#if defined(MESSPLUS_HAVE_NEON_KERNELS)
constexpr KernelTable kNeonTable{Isa::neon, &neon::dot, &neon::sgd_row};
#endif

const KernelTable* initial_table() {
    return &table_for(detect_isa());
}

std::atomic<const KernelTable*>& active() {
    static std::atomic<const KernelTable*> table{initial_table()};
    return table;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return "scalar";
        case Isa::avx2:
            return "avx2";
        case Isa::neon:
            return "neon";
    }
    return "unknown";
}

bool isa_supported(Isa isa) noexcept {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(MESSPLUS_HAVE_AVX2_KERNELS)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(MESSPLUS_HAVE_NEON_KERNELS)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() {
    if (const char* forced = std::getenv("MESSPLUS_ISA")) {
        const std::string name(forced);
        for (Isa isa : {Isa::scalar, Isa::avx2, Isa::neon}) {
            if (name == isa_name(isa) && isa_supported(isa)) {
                return isa;
            }
        }
    }
    if (isa_supported(Isa::avx2)) {
        return Isa::avx2;
    }
    if (isa_supported(Isa::neon)) {
        return Isa::neon;
    }
    return Isa::scalar;
}

const KernelTable& table_for(Isa isa) {
    if (!isa_supported(isa)) {
        throw ParameterError("kernel ISA not supported on this host: " + std::string(isa_name(isa)));
    }
    switch (isa) {
#if defined(MESSPLUS_HAVE_AVX2_KERNELS)
        case Isa::avx2:
            return kAvx2Table;
#endif
#if defined(MESSPLUS_HAVE_NEON_KERNELS)
        case Isa::neon:
            return kNeonTable;
#endif
        default:
            return kScalarTable;
    }
}

Isa active_isa() noexcept {
    return active().load(std::memory_order_acquire)->isa;
}

void set_active_isa(Isa isa) {
    active().store(&table_for(isa), std::memory_order_release);
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ParameterError("dot: length mismatch");
    }
    return active().load(std::memory_order_acquire)->dot(a.data(), b.data(), a.size());
}

void sgd_row(std::span<double> z, std::span<const double> x, double coef, double mu, double eta) {
    if (z.size() != x.size()) {
        throw ParameterError("sgd_row: length mismatch");
    }
    active().load(std::memory_order_acquire)->sgd_row(z.data(), x.data(), z.size(), coef, mu, eta);
}

}  // namespace messplus::kernels
