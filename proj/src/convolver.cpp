#include "convolver.hpp"

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <mutex>

namespace grem::rwlab::detail {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::size_t kDirectLimit = 200'000;

}  // namespace

std::size_t good_fft_size(std::size_t n) {
  std::size_t best = 1;
  while (best < n) best *= 2;
  for (std::size_t p7 = 1; p7 <= best; p7 *= 7)
    for (std::size_t p5 = p7; p5 <= best; p5 *= 5)
      for (std::size_t p3 = p5; p3 <= best; p3 *= 3) {
        std::size_t v = p3;
        while (v < n) v *= 2;
        best = std::min(best, v);
      }
  return best;
}

struct Convolver::Fft {
  std::size_t n = 0;
  double* real = nullptr;
  fftw_complex* spec = nullptr;
  fftw_complex* kernel_spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  ~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(real);
    fftw_free(spec);
    fftw_free(kernel_spec);
  }
};

Convolver::Convolver(const std::vector<double>& kernel, std::size_t n_in) : kernel_(kernel), n_in_(n_in) {
  if (kernel_.size() < 32 || n_in_ * kernel_.size() <= kDirectLimit) return;
  fft_ = std::make_unique<Fft>();
  auto& f = *fft_;
  f.n = good_fft_size(out_size());
  const std::size_t nc = f.n / 2 + 1;
  f.real = fftw_alloc_real(f.n);
  f.spec = fftw_alloc_complex(nc);
  f.kernel_spec = fftw_alloc_complex(nc);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    const int n = static_cast<int>(f.n);
    f.forward = fftw_plan_dft_r2c_1d(n, f.real, f.spec, FFTW_ESTIMATE);
    f.backward = fftw_plan_dft_c2r_1d(n, f.spec, f.real, FFTW_ESTIMATE);
  }
  std::fill(f.real, f.real + f.n, 0.0);
  std::copy(kernel_.begin(), kernel_.end(), f.real);
  fftw_execute_dft_r2c(f.forward, f.real, f.kernel_spec);
}

Convolver::~Convolver() = default;

void Convolver::apply(const std::vector<double>& in, std::vector<double>& out) {
  out.assign(out_size(), 0.0);
  if (!fft_) {
    const std::size_t w = kernel_.size();
    for (std::size_t i = 0; i < n_in_; ++i) {
      const double a = in[i];
      if (a == 0) continue;
      double* o = out.data() + i;
      for (std::size_t j = 0; j < w; ++j) o[j] += a * kernel_[j];
    }
    return;
  }
  auto& f = *fft_;
  std::fill(f.real, f.real + f.n, 0.0);
  std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n_in_), f.real);
  fftw_execute_dft_r2c(f.forward, f.real, f.spec);
  const std::size_t nc = f.n / 2 + 1;
  for (std::size_t i = 0; i < nc; ++i) {
    const double re = f.spec[i][0] * f.kernel_spec[i][0] - f.spec[i][1] * f.kernel_spec[i][1];
    const double im = f.spec[i][0] * f.kernel_spec[i][1] + f.spec[i][1] * f.kernel_spec[i][0];
    f.spec[i][0] = re;
    f.spec[i][1] = im;
  }
  fftw_execute_dft_c2r(f.backward, f.spec, f.real);
  const double scale = 1.0 / static_cast<double>(f.n);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f.real[i] * scale;
}

std::vector<double> fft_power(const std::vector<double>& a, int power) {
  if (power == 1) return a;
  const std::size_t len = (a.size() - 1) * static_cast<std::size_t>(power) + 1;
  const std::size_t n = good_fft_size(len);
  const std::size_t nc = n / 2 + 1;
  double* real = fftw_alloc_real(n);
  fftw_complex* spec = fftw_alloc_complex(nc);
  fftw_plan fwd, bwd;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spec, FFTW_ESTIMATE);
    bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real, FFTW_ESTIMATE);
  }
  std::fill(real, real + n, 0.0);
  std::copy(a.begin(), a.end(), real);
  fftw_execute(fwd);
  for (std::size_t i = 0; i < nc; ++i) {
    const std::complex<double> z = std::pow(std::complex<double>(spec[i][0], spec[i][1]), power);
    spec[i][0] = z.real();
    spec[i][1] = z.imag();
  }
  fftw_execute(bwd);
  std::vector<double> out(len);
  for (std::size_t i = 0; i < len; ++i) out[i] = std::max(0.0, real[i] / static_cast<double>(n));
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
  }
  fftw_free(real);
  fftw_free(spec);
  return out;
}

}  // namespace grem::rwlab::detail
