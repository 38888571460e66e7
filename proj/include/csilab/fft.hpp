#pragma once

// Thin RAII layer over FFTW for real <-> half-complex transforms.
//
// Plans are created once per length and cached. FFTW's planner is not
// thread-safe, so creation is serialized; execution through the new-array
// interface is safe from any thread.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace csilab::fft {

namespace detail {

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

template <typename T>
using AlignedBuffer = std::unique_ptr<T[], FftwFree>;

inline AlignedBuffer<double> alloc_real(std::size_t n) {
  return AlignedBuffer<double>(fftw_alloc_real(n));
}

inline AlignedBuffer<fftw_complex> alloc_complex(std::size_t n) {
  return AlignedBuffer<fftw_complex>(fftw_alloc_complex(n));
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
};

class PlanCache {
public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanPair get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    auto in = alloc_real(n);
    auto out = alloc_complex(n / 2 + 1);
    PlanPair p;
    const int len = static_cast<int>(n);
    p.forward = fftw_plan_dft_r2c_1d(len, in.get(), out.get(), FFTW_ESTIMATE);
    p.backward = fftw_plan_dft_c2r_1d(len, out.get(), in.get(), FFTW_ESTIMATE);
    plans_.emplace(n, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.backward);
    }
  }

  std::mutex mutex_;
  std::map<std::size_t, PlanPair> plans_;
};

} // namespace detail

using Spectrum = std::vector<std::complex<double>>;

// Unnormalized forward DFT of a real sequence; returns n/2+1 bins.
inline Spectrum rfft(std::span<const double> x) {
  const std::size_t n = x.size();
  Spectrum result(n / 2 + 1);
  if (n == 0) return result;
  auto plan = detail::PlanCache::instance().get(n);
  auto in = detail::alloc_real(n);
  auto out = detail::alloc_complex(n / 2 + 1);
  std::memcpy(in.get(), x.data(), n * sizeof(double));
  fftw_execute_dft_r2c(plan.forward, in.get(), out.get());
  std::memcpy(static_cast<void*>(result.data()), out.get(), result.size() * sizeof(fftw_complex));
  return result;
}

// Inverse of rfft, including the 1/n factor: irfft(rfft(x), n) == x.
inline std::vector<double> irfft(std::span<const std::complex<double>> bins, std::size_t n) {
  std::vector<double> result(n);
  if (n == 0) return result;
  auto plan = detail::PlanCache::instance().get(n);
  auto in = detail::alloc_complex(n / 2 + 1);
  auto out = detail::alloc_real(n);
  const std::size_t m = std::min(bins.size(), n / 2 + 1);
  std::memset(in.get(), 0, (n / 2 + 1) * sizeof(fftw_complex));
  std::memcpy(in.get(), bins.data(), m * sizeof(fftw_complex));
  fftw_execute_dft_c2r(plan.backward, in.get(), out.get());
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) result[i] = out[i] * scale;
  return result;
}

// Frequency in Hz of rfft bin k for length n at the given sample rate.
inline double bin_frequency(std::size_t k, std::size_t n, double sample_rate) {
  return static_cast<double>(k) * sample_rate / static_cast<double>(n);
}

} // namespace csilab::fft
