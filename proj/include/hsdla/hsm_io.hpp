#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "hsdla/matrix.hpp"

namespace hsdla {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// HSM1 layout: magic "HSDLAM1\0", u64 rows, u64 cols (little endian), then
/// rows*cols (re, im) binary64 pairs in column-major order. The leading
/// dimension is dropped on write.
inline constexpr char kHsmMagic[8] = {'H', 'S', 'D', 'L', 'A', 'M', '1', '\0'};

void write_hsm(std::ostream& out, ConstMatrixView m);
ComplexDense read_hsm(std::istream& in);

void write_hsm_file(const std::filesystem::path& path, ConstMatrixView m);
ComplexDense read_hsm_file(const std::filesystem::path& path);

}  // namespace hsdla
