#pragma once

#include <stdexcept>
#include <string>

namespace cplcalib {

// Base class for every error raised by the library. The CLI maps these to
// stable process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Effective disparity is zero (or below the solver guard band), so the
// stereo depth equation x_cam = fx*b/d cannot be evaluated.
class ZeroDisparityError : public Error {
 public:
  using Error::Error;
};

// A computed coordinate came out NaN or infinite.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

// Camera point with x_cam = 0 cannot be mapped back to a pixel.
class DegeneratePointError : public Error {
 public:
  using Error::Error;
};

// mean(|targets|) = 0, so the normalized error is undefined.
class ZeroDenominatorError : public Error {
 public:
  using Error::Error;
};

// Focal length or image width must be strictly positive.
class NonPositiveInputError : public Error {
 public:
  using Error::Error;
};

// Vector/feature sizes do not line up.
class ShapeMismatchError : public Error {
 public:
  using Error::Error;
};

// The disparity range lies entirely inside the guard band, so no valid
// sample can ever be drawn.
class EmptyRangeAfterGuardError : public Error {
 public:
  using Error::Error;
};

// Training or fitting produced a non-finite loss.
class DivergenceDetectedError : public Error {
 public:
  using Error::Error;
};

// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cplcalib
