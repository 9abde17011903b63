#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace edgeloc {

/// Row-major image grid: rows are image rows (y), columns are image columns (x).
template <typename T>
using Grid = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary edge image, values in {0, 1}.
using EdgeMap = Grid<std::uint8_t>;
/// 8-bit grayscale intensities.
using GrayImage = Grid<std::uint8_t>;
using DepthImage = Grid<double>;
using LabelImage = Grid<std::int32_t>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define EDGELOC_DEFINE_ERROR(Name) \
  class Name : public Error {      \
   public:                         \
    using Error::Error;            \
  }

EDGELOC_DEFINE_ERROR(PreconditionError);
EDGELOC_DEFINE_ERROR(IoError);
EDGELOC_DEFINE_ERROR(EmptyMeshError);
EDGELOC_DEFINE_ERROR(UnrenderedPixelError);
EDGELOC_DEFINE_ERROR(TooFewEdgePixelsError);
EDGELOC_DEFINE_ERROR(SizeMismatchError);
EDGELOC_DEFINE_ERROR(WindowClippedError);
EDGELOC_DEFINE_ERROR(DegenerateConfigurationError);
EDGELOC_DEFINE_ERROR(NoConsensusError);

#undef EDGELOC_DEFINE_ERROR

}  // namespace edgeloc
