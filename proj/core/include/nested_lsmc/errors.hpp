#pragma once

#include <stdexcept>
#include <string>

namespace nlsmc {

// All library errors derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define NLSMC_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

NLSMC_DEFINE_ERROR(DomainError);
NLSMC_DEFINE_ERROR(DimensionMismatch);
NLSMC_DEFINE_ERROR(NotPositiveDefinite);
NLSMC_DEFINE_ERROR(NoConvergence);
NLSMC_DEFINE_ERROR(SingularGram);
NLSMC_DEFINE_ERROR(WrongInnerCount);
NLSMC_DEFINE_ERROR(DegenerateSamples);
NLSMC_DEFINE_ERROR(ZeroA);
NLSMC_DEFINE_ERROR(BudgetTooSmall);
NLSMC_DEFINE_ERROR(QuadratureNotConverged);

#undef NLSMC_DEFINE_ERROR

}  // namespace nlsmc
