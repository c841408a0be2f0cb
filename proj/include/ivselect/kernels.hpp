#pragma once

// Dense vector kernels used by the coordinate-descent solvers.
//
// A scalar reference implementation is always available. SIMD variants
// (AVX2+FMA on x86-64, NEON on AArch64) are compiled when the toolchain
// supports them and selected at runtime when the CPU does. Setting the
// environment variable IVSELECT_KERNELS=scalar forces the reference path.

#include <cstddef>
#include <string_view>

namespace ivselect::kernels {

struct KernelTable {
    std::string_view name;
    /// sum_i a[i] * b[i]
    double (*dot)(const double* a, const double* b, std::size_t n);
    /// sum_i w[i] * a[i] * b[i]
    double (*wdot)(const double* w, const double* a, const double* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    /// sum_i a[i]
    double (*sum)(const double* a, std::size_t n);
    /// sum_i (a[i] - b[i])^2
    double (*sqdist)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar();

/// Best variant supported by the running CPU, or nullptr when only the
/// scalar path exists.
const KernelTable* simd();

/// Table used by the library. Resolved once on first call.
const KernelTable& active();

}  // namespace ivselect::kernels
