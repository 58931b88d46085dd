#pragma once

#include <stdexcept>
#include <string>

namespace provsense {

// Exit-code categories used by the CLI: 1 usage, 2 data, 3 numerical.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedRecord : DataError {
    std::size_t line_no;
    MalformedRecord(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

struct IllegalRelation : DataError {
    std::size_t line_no;
    IllegalRelation(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_no(line) {}
};

struct InvalidConfig : UsageError {
    using UsageError::UsageError;
};

struct ShapeMismatch : DataError {
    using DataError::DataError;
};

struct NoConvergence : NumericError {
    std::size_t column;
    double residual;
    NoConvergence(std::size_t col, double res)
        : NumericError("cg failed to converge on column " + std::to_string(col) +
                       ", residual " + std::to_string(res)),
          column(col), residual(res) {}
};

struct NonFinite : NumericError {
    using NumericError::NumericError;
};

struct EmptyCorpus : DataError {
    using DataError::DataError;
};

struct DegenerateSplit : DataError {
    using DataError::DataError;
};

struct DegenerateFlow : NumericError {
    using NumericError::NumericError;
};

}  // namespace provsense
