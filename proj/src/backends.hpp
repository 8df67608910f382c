#pragma once

#include <memory>

#include "hsdla/kernels.hpp"

namespace hsdla::detail {

std::unique_ptr<KernelBackend> make_reference_backend(int threads);

#ifdef HSDLA_HAVE_BLAS
std::unique_ptr<KernelBackend> make_blas_backend(int threads);
#endif

}  // namespace hsdla::detail
