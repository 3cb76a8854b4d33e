#pragma once

#include <cstddef>
#include <memory>
#include <vector>

namespace grem::rwlab::detail {

// Linear convolution of length-n_in inputs with a fixed kernel. Large problems use
// FFTW; small ones the direct sum.
class Convolver {
 public:
  Convolver(const std::vector<double>& kernel, std::size_t n_in);
  ~Convolver();
  Convolver(const Convolver&) = delete;
  Convolver& operator=(const Convolver&) = delete;

  std::size_t out_size() const { return n_in_ + kernel_.size() - 1; }
  // out is resized to out_size().
  void apply(const std::vector<double>& in, std::vector<double>& out);

 private:
  struct Fft;
  std::vector<double> kernel_;
  std::size_t n_in_;
  std::unique_ptr<Fft> fft_;
};

// Smallest 2^a 3^b 5^c 7^d >= n.
std::size_t good_fft_size(std::size_t n);

// a^{*power} by one forward transform and a pointwise power.
std::vector<double> fft_power(const std::vector<double>& a, int power);

}  // namespace grem::rwlab::detail
