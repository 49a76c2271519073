#pragma once

#include <stdexcept>
#include <string>

namespace phtopo {

/// Base class of every error raised by the library. `code()` maps onto the
/// CLI exit-code families (2 config, 3 numerical, 4 invariant).
class Error : public std::runtime_error {
public:
  enum class Family { Config, Numerical, Invariant };

  Error(Family family, const std::string& what)
      : std::runtime_error(what), family_(family) {}

  Family family() const noexcept { return family_; }

private:
  Family family_;
};

#define PHTOPO_DEFINE_ERROR(Name, Fam)                                         \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what)                                     \
        : Error(Family::Fam, #Name ": " + what) {}                             \
  };

// geometry
PHTOPO_DEFINE_ERROR(NonPeriodicAxis, Config)
PHTOPO_DEFINE_ERROR(AmbiguousWrap, Numerical)
// spectral kernel
PHTOPO_DEFINE_ERROR(DimensionTooLarge, Config)
PHTOPO_DEFINE_ERROR(NoConvergence, Numerical)
PHTOPO_DEFINE_ERROR(DefectiveCluster, Numerical)
// models
PHTOPO_DEFINE_ERROR(InvalidParams, Config)
// tracking
PHTOPO_DEFINE_ERROR(NearDegeneracyUnresolved, Numerical)
PHTOPO_DEFINE_ERROR(BasepointMismatch, Config)
PHTOPO_DEFINE_ERROR(ReferenceOnSpectrum, Numerical)
// features
PHTOPO_DEFINE_ERROR(RefinementDiverged, Numerical)
PHTOPO_DEFINE_ERROR(TraceStalled, Numerical)
PHTOPO_DEFINE_ERROR(CompactnessViolation, Invariant)
// sweeps
PHTOPO_DEFINE_ERROR(NoSignChange, Numerical)
// cli
PHTOPO_DEFINE_ERROR(ConfigError, Config)

#undef PHTOPO_DEFINE_ERROR

} // namespace phtopo
