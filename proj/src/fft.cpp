#include "edgeloc/fft.hpp"

#include <cstring>
#include <map>
#include <mutex>
#include <utility>

#include <fftw3.h>

namespace edgeloc::fft {

namespace {

struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

struct RealBuffer {
  explicit RealBuffer(std::size_t n) : data(fftw_alloc_real(n)) {}
  ~RealBuffer() { fftw_free(data); }
  RealBuffer(const RealBuffer&) = delete;
  RealBuffer& operator=(const RealBuffer&) = delete;
  double* data;
};

// FFTW planning is not thread-safe; executing an existing plan on new arrays is.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  Plans get(Shape shape) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_pair(shape.rows, shape.cols);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    RealBuffer real(static_cast<std::size_t>(shape.rows) * shape.cols);
    fftw_complex* spec = fftw_alloc_complex(shape.spectrumSize());
    Plans p;
    p.forward = fftw_plan_dft_r2c_2d(shape.rows, shape.cols, real.data, spec, FFTW_ESTIMATE);
    p.inverse = fftw_plan_dft_c2r_2d(shape.rows, shape.cols, spec, real.data, FFTW_ESTIMATE);
    fftw_free(spec);
    plans_.emplace(key, p);
    return p;
  }

  std::size_t size() {
    std::lock_guard<std::mutex> lock(mutex_);
    return plans_.size();
  }

  ~PlanCache() {
    for (auto& [key, p] : plans_) {
      fftw_destroy_plan(p.forward);
      fftw_destroy_plan(p.inverse);
    }
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<int, int>, Plans> plans_;
};

}  // namespace

int nextPowerOfTwo(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

Shape convolutionShape(int image_rows, int image_cols, int kernel_rows, int kernel_cols) {
  return {nextPowerOfTwo(image_rows + kernel_rows - 1), nextPowerOfTwo(image_cols + kernel_cols - 1)};
}

void Spectrum::Deleter::operator()(std::complex<double>* p) const { fftw_free(p); }

Spectrum::Spectrum(Shape shape)
    : shape_(shape), data_(reinterpret_cast<std::complex<double>*>(fftw_alloc_complex(shape.spectrumSize()))) {
  std::memset(static_cast<void*>(data_.get()), 0, sizeof(std::complex<double>) * size());
}

void Spectrum::addProduct(double weight, const Spectrum& a, const Spectrum& b) {
  if (!(a.shape_ == shape_) || !(b.shape_ == shape_)) throw SizeMismatchError("spectrum shapes differ");
  std::complex<double>* out = data();
  const std::complex<double>* pa = a.data();
  const std::complex<double>* pb = b.data();
  for (std::size_t i = 0; i < size(); ++i) out[i] += weight * pa[i] * pb[i];
}

Spectrum forward(const Grid<double>& signal, Shape shape) {
  if (signal.rows() > shape.rows || signal.cols() > shape.cols) throw SizeMismatchError("signal exceeds FFT size");
  const Plans plans = PlanCache::instance().get(shape);
  RealBuffer real(static_cast<std::size_t>(shape.rows) * shape.cols);
  std::memset(real.data, 0, sizeof(double) * shape.rows * shape.cols);
  for (Eigen::Index r = 0; r < signal.rows(); ++r)
    std::memcpy(real.data + r * shape.cols, signal.data() + r * signal.cols(), sizeof(double) * signal.cols());
  Spectrum out(shape);
  fftw_execute_dft_r2c(plans.forward, real.data, reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

Grid<double> inverse(Spectrum&& spectrum) {
  const Shape shape = spectrum.shape();
  const Plans plans = PlanCache::instance().get(shape);
  RealBuffer real(static_cast<std::size_t>(shape.rows) * shape.cols);
  fftw_execute_dft_c2r(plans.inverse, reinterpret_cast<fftw_complex*>(spectrum.data()), real.data);
  Grid<double> out(shape.rows, shape.cols);
  const double norm = 1.0 / (static_cast<double>(shape.rows) * shape.cols);
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = real.data[i] * norm;
  return out;
}

std::size_t cachedPlanCount() { return PlanCache::instance().size(); }

}  // namespace edgeloc::fft
