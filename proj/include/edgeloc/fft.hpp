#pragma once

#include <complex>
#include <cstddef>
#include <memory>

#include "edgeloc/types.hpp"

namespace edgeloc::fft {

/// Padded transform size.
struct Shape {
  int rows = 0;
  int cols = 0;
  bool operator==(const Shape&) const = default;
  std::size_t spectrumSize() const { return static_cast<std::size_t>(rows) * (cols / 2 + 1); }
};

int nextPowerOfTwo(int n);

/// Power-of-two size for a linear convolution of an image with a kernel.
Shape convolutionShape(int image_rows, int image_cols, int kernel_rows, int kernel_cols);

/// Half-spectrum of a real 2D signal (rows x (cols/2 + 1)), in FFTW-aligned storage.
class Spectrum {
 public:
  explicit Spectrum(Shape shape);
  Spectrum(Spectrum&&) noexcept = default;
  Spectrum& operator=(Spectrum&&) noexcept = default;

  const Shape& shape() const { return shape_; }
  std::complex<double>* data() { return data_.get(); }
  const std::complex<double>* data() const { return data_.get(); }
  std::size_t size() const { return shape_.spectrumSize(); }

  /// this += weight * a * b, elementwise.
  void addProduct(double weight, const Spectrum& a, const Spectrum& b);

 private:
  struct Deleter {
    void operator()(std::complex<double>* p) const;
  };
  Shape shape_;
  std::unique_ptr<std::complex<double>[], Deleter> data_;
};

/// Forward r2c transform of `signal` zero-padded to `shape` (signal at the top-left corner).
Spectrum forward(const Grid<double>& signal, Shape shape);

/// Inverse c2r transform, normalized. Consumes the spectrum.
Grid<double> inverse(Spectrum&& spectrum);

/// Number of distinct transform sizes planned so far.
std::size_t cachedPlanCount();

}  // namespace edgeloc::fft
