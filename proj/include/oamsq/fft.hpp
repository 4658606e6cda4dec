#pragma once

#include <complex>
#include <cstddef>
#include <cstdlib>
#include <new>
#include <span>
#include <vector>

namespace oamsq {

using cplx = std::complex<double>;

template <typename T, std::size_t Alignment = 64>
struct AlignedAllocator {
  using value_type = T;
  template <typename U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}

  T* allocate(std::size_t n) {
    std::size_t bytes = ((n * sizeof(T) + Alignment - 1) / Alignment) * Alignment;
    void* p = std::aligned_alloc(Alignment, bytes == 0 ? Alignment : bytes);
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <typename U>
  bool operator==(const AlignedAllocator<U, Alignment>&) const noexcept { return true; }
};

using FieldBuffer = std::vector<cplx, AlignedAllocator<cplx>>;

// 2D DFT over an ny-row by nx-column row-major array. The forward transform
// leaves the spectrum transposed: element [ikx * ny + iky]. The inverse
// consumes that layout and restores [iy * nx + ix], scaled by 1/(nx*ny).
// Plans are FFTW_ESTIMATE so results are bit-reproducible across runs and
// threads.
class Fft2D {
 public:
  Fft2D(std::size_t nx, std::size_t ny);

  void forward(FieldBuffer& data) const;
  void inverse(FieldBuffer& data) const;

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }

 private:
  std::size_t nx_, ny_;
};

// Unnormalized in-place 1D DFT (forward uses exp(-i...)).
void fft_1d(std::span<cplx> data, bool forward);

// Signed frequency index for DFT bin i of an n-point transform.
inline long fft_frequency_index(std::size_t i, std::size_t n) {
  return i < (n + 1) / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(n);
}

// Angular spatial frequency (rad/m) of bin i for n samples at pitch d.
inline double angular_frequency(std::size_t i, std::size_t n, double d) {
  return 6.283185307179586 * static_cast<double>(fft_frequency_index(i, n)) /
         (static_cast<double>(n) * d);
}

}  // namespace oamsq
