#pragma once

#include <stdexcept>
#include <string>

namespace clasp {

// Root of every exception thrown by the library. Subclasses carry the
// failure category; callers that only need a message can catch Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CLASP_DEFINE_ERROR(Name)          \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

// numerics
CLASP_DEFINE_ERROR(ShapeError);
CLASP_DEFINE_ERROR(ContractError);
CLASP_DEFINE_ERROR(NumericalError);

// dataset
CLASP_DEFINE_ERROR(MissingParamError);
CLASP_DEFINE_ERROR(InvalidParamError);
CLASP_DEFINE_ERROR(TemplateError);
CLASP_DEFINE_ERROR(ConfigError);
CLASP_DEFINE_ERROR(SplitError);
CLASP_DEFINE_ERROR(ParseError);
CLASP_DEFINE_ERROR(VersionError);

// encoders
CLASP_DEFINE_ERROR(VocabError);
CLASP_DEFINE_ERROR(InputTooShortError);
CLASP_DEFINE_ERROR(InvalidSignalError);

// contrastive
CLASP_DEFINE_ERROR(DivergenceError);
CLASP_DEFINE_ERROR(CheckpointError);

// retrieval
CLASP_DEFINE_ERROR(IndexError);
CLASP_DEFINE_ERROR(ModalityError);
CLASP_DEFINE_ERROR(StaleIndexError);

// eval
CLASP_DEFINE_ERROR(LeakageError);

#undef CLASP_DEFINE_ERROR

}  // namespace clasp
