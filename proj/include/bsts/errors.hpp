#pragma once

#include <stdexcept>
#include <string>

namespace bsts {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// series / panel construction
struct EmptyIntersection : Error { using Error::Error; };
struct TooShort : Error { using Error::Error; };
struct NoPoints : Error { using Error::Error; };

// state-space assembly and filtering
struct DuplicateTrend : Error { using Error::Error; };
struct DuplicateSeasonal : Error { using Error::Error; };
struct NumericalFailure : Error { using Error::Error; };

// regression
struct SingularInformation : Error { using Error::Error; };

// impact
struct MissingPostCovariate : Error { using Error::Error; };
struct DegenerateDraws : Error { using Error::Error; };

// prescreening
struct ConstantSeries : Error { using Error::Error; };

// validation
struct AllZeroActuals : Error { using Error::Error; };
struct InsufficientData : Error { using Error::Error; };

// ingest
struct HttpError : Error {
    int status;
    explicit HttpError(int status_, const std::string& what_)
        : Error(what_), status(status_) {}
};
struct ParseError : Error { using Error::Error; };
struct RangeTooLarge : Error { using Error::Error; };
struct NonContiguousDates : Error { using Error::Error; };
struct DuplicateColumn : Error { using Error::Error; };
struct UnparseableValue : Error {
    std::size_t row;
    std::string column;
    UnparseableValue(std::size_t row_, std::string column_, const std::string& what_)
        : Error(what_), row(row_), column(std::move(column_)) {}
};

}  // namespace bsts
