#include "oamsq/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

namespace oamsq {

namespace {

// The FFTW planner is not thread-safe; execution of an existing plan on
// new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan row_plan(std::size_t n, std::size_t howmany, int sign) {
  static std::map<std::tuple<std::size_t, std::size_t, int>, fftw_plan> cache;
  std::lock_guard lock(planner_mutex());
  auto key = std::make_tuple(n, howmany, sign);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto* tmp = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n * howmany));
  int len = static_cast<int>(n);
  fftw_plan p = fftw_plan_many_dft(1, &len, static_cast<int>(howmany), tmp, nullptr, 1, len, tmp,
                                   nullptr, 1, len, sign, FFTW_ESTIMATE);
  fftw_free(tmp);
  cache.emplace(key, p);
  return p;
}

void execute(fftw_plan p, cplx* data) {
  auto* d = reinterpret_cast<fftw_complex*>(data);
  fftw_execute_dft(p, d, d);
}

// out[c * rows + r] = in[r * cols + c]
void transpose(const cplx* in, cplx* out, std::size_t rows, std::size_t cols) {
  // Small blocks, written column by column: power-of-two strides make
  // larger tiles thrash the cache.
  constexpr std::size_t block = 8;
  for (std::size_t c0 = 0; c0 < cols; c0 += block) {
    std::size_t c1 = std::min(cols, c0 + block);
    for (std::size_t r0 = 0; r0 < rows; r0 += block) {
      std::size_t r1 = std::min(rows, r0 + block);
      for (std::size_t c = c0; c < c1; ++c)
        for (std::size_t r = r0; r < r1; ++r) out[c * rows + r] = in[r * cols + c];
    }
  }
}

FieldBuffer& scratch(std::size_t n) {
  thread_local FieldBuffer buf;
  if (buf.size() != n) buf.resize(n);
  return buf;
}

}  // namespace

Fft2D::Fft2D(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
  row_plan(nx_, ny_, FFTW_FORWARD);
  row_plan(ny_, nx_, FFTW_FORWARD);
  row_plan(nx_, ny_, FFTW_BACKWARD);
  row_plan(ny_, nx_, FFTW_BACKWARD);
}

void Fft2D::forward(FieldBuffer& data) const {
  FieldBuffer& tmp = scratch(data.size());
  execute(row_plan(nx_, ny_, FFTW_FORWARD), data.data());
  transpose(data.data(), tmp.data(), ny_, nx_);
  data.swap(tmp);
  execute(row_plan(ny_, nx_, FFTW_FORWARD), data.data());
}

void Fft2D::inverse(FieldBuffer& data) const {
  FieldBuffer& tmp = scratch(data.size());
  execute(row_plan(ny_, nx_, FFTW_BACKWARD), data.data());
  transpose(data.data(), tmp.data(), nx_, ny_);
  data.swap(tmp);
  const double scale = 1.0 / static_cast<double>(nx_ * ny_);
  for (auto& v : data) v *= scale;
  execute(row_plan(nx_, ny_, FFTW_BACKWARD), data.data());
}

void fft_1d(std::span<cplx> data, bool forward) {
  thread_local FieldBuffer buf;
  buf.assign(data.begin(), data.end());
  execute(row_plan(data.size(), 1, forward ? FFTW_FORWARD : FFTW_BACKWARD), buf.data());
  std::copy(buf.begin(), buf.end(), data.begin());
}

}  // namespace oamsq
