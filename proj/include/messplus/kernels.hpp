#pragma once

// Arithmetic inner loops of the satisfaction predictor.
//
// Every variant evaluates the same expression tree: dot products accumulate
// into four interleaved lanes that are combined as (l0 + l1) + (l2 + l3)
// before the scalar tail, and no variant fuses multiply-add. Results are
// therefore bit-identical across ISAs, which keeps routing decisions (and
// event-log replays) reproducible on any host.

#include <cstddef>
#include <span>
#include <string_view>

namespace messplus::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa) noexcept;

/// True if this binary contains kernels for `isa` and the CPU can run them.
bool isa_supported(Isa isa) noexcept;

/// Best supported ISA, unless MESSPLUS_ISA=scalar|avx2|neon overrides it.
Isa detect_isa();

Isa active_isa() noexcept;

/// Switch the dispatch table; throws ParameterError if unsupported.
void set_active_isa(Isa isa);

using DotFn = double (*)(const double* a, const double* b, std::size_t n);
/// z[i] <- z[i] - eta * (coef * x[i] + mu * z[i])
using SgdRowFn = void (*)(double* z, const double* x, std::size_t n, double coef, double mu,
                          double eta);

struct KernelTable {
    Isa isa;
    DotFn dot;
    SgdRowFn sgd_row;
};

/// Kernel table for a specific ISA; throws ParameterError if unsupported.
const KernelTable& table_for(Isa isa);

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void sgd_row(double* z, const double* x, std::size_t n, double coef, double mu, double eta);
}  // namespace scalar

// Dispatched entry points.
double dot(std::span<const double> a, std::span<const double> b);
void sgd_row(std::span<double> z, std::span<const double> x, double coef, double mu, double eta);

}  // namespace messplus::kernels
