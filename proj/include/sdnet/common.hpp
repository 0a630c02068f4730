#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace sdnet {

/// Base class for every error this library throws on purpose.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SDNET_DEFINE_ERROR(NAME)            \
  class NAME : public ::sdnet::Error {      \
   public:                                  \
    using ::sdnet::Error::Error;            \
  }

SDNET_DEFINE_ERROR(ConfigError);
SDNET_DEFINE_ERROR(EmptyDataset);
SDNET_DEFINE_ERROR(DivergedTraining);

// Round-half-up, the rounding rule used for margins and holdout sizes.
// Deterministic across platforms (unlike std::rint under changing FP modes).
inline long round_half_up(double v) { return static_cast<long>(std::floor(v + 0.5)); }

inline constexpr const char* kSchemaVersion = "1";

}  // namespace sdnet
