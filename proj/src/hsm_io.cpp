#include "hsdla/hsm_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <vector>

namespace hsdla {
namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

void put_u64(std::ostream& out, std::uint64_t v) {
  const std::uint64_t le = to_little(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint64_t le = 0;
  in.read(reinterpret_cast<char*>(&le), sizeof le);
  if (!in) throw IoError("HSM1: truncated header");
  return to_little(le);
}

void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

}  // namespace

void write_hsm(std::ostream& out, ConstMatrixView m) {
  out.write(kHsmMagic, sizeof kHsmMagic);
  put_u64(out, m.rows);
  put_u64(out, m.cols);
  if constexpr (std::endian::native == std::endian::little) {
    for (Index j = 0; j < m.cols; ++j) {
      out.write(reinterpret_cast<const char*>(m.column(j)), static_cast<std::streamsize>(m.rows * sizeof(Complex)));
    }
  } else {
    for (Index j = 0; j < m.cols; ++j)
      for (Index i = 0; i < m.rows; ++i) {
        put_f64(out, m(i, j).real());
        put_f64(out, m(i, j).imag());
      }
  }
  if (!out) throw IoError("HSM1: write failed");
}

ComplexDense read_hsm(std::istream& in) {
  char magic[8] = {};
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kHsmMagic, sizeof magic) != 0) throw IoError("HSM1: bad magic");
  const std::uint64_t rows = get_u64(in);
  const std::uint64_t cols = get_u64(in);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 40;
  if (rows > kLimit || cols > kLimit || (rows != 0 && cols > kLimit / rows)) {
    throw IoError("HSM1: implausible shape " + shape_string(rows, cols));
  }
  ComplexDense m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    if constexpr (std::endian::native == std::endian::little) {
      in.read(reinterpret_cast<char*>(m.data() + j * m.leading_dimension()),
              static_cast<std::streamsize>(rows * sizeof(Complex)));
    } else {
      for (Index i = 0; i < rows; ++i) {
        const double re = std::bit_cast<double>(get_u64(in));
        const double im = std::bit_cast<double>(get_u64(in));
        m(i, j) = Complex(re, im);
      }
    }
    if (!in) throw IoError("HSM1: truncated payload");
  }
  return m;
}

void write_hsm_file(const std::filesystem::path& path, ConstMatrixView m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_hsm(out, m);
}

ComplexDense read_hsm_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_hsm(in);
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace hsdla
