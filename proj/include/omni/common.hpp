#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace omni {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kHalfPi = kPi / 2.0;
inline constexpr double kTwoPi = 2.0 * kPi;

// Latitude clamp applied before sec/asin evaluation near the poles.
inline constexpr double kPoleEps = 1e-3;

// Cap on floor distances recovered from near-horizon boundaries.
inline constexpr double kMaxFloorDistance = 1000.0;

inline constexpr double kDefaultCameraHeight = 1.6;

enum class ErrorCode {
  NonNegativeLatitude,
  NonPositiveLatitude,
  KernelTooLarge,
  ShapeMismatch,
  TargetOutOfRange,
  EmptyDataset,
  TooFewPeaks,
  NoValidColumns,
  DegeneratePart,
  DegenerateRay,
  InvalidFactor,
  InvalidLayout,
  EmptyCorners,
  InvalidConfig,
  IoError,
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& msg) { throw Error(c, msg); }

inline void check(bool ok, ErrorCode c, const std::string& msg) {
  if (!ok) fail(c, msg);
}

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace omni
