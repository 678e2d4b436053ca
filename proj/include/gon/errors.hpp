#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gon {

/// Broad failure category; the CLI maps these to exit codes
/// (data = 2, config = 3, domain = 4).
enum class ErrorCategory { Data, Config, Domain };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const { return category_; }

private:
    ErrorCategory category_;
};

struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorCategory::Data, m) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorCategory::Config, m) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& m) : Error(ErrorCategory::Domain, m) {}
};

/// Requested output value lies outside the range of a monotone calibrator.
struct NotInvertibleAtValue : DomainError {
    explicit NotInvertibleAtValue(const std::string& m) : DomainError(m) {}
};

/// Input data is unusable for the requested construction (e.g. zero-width
/// domain for keypoint placement).
struct DegenerateInput : DataError {
    explicit DegenerateInput(const std::string& m) : DataError(m) {}
};

/// A point falls outside the box a function is defined on.
struct OutOfDomain : DomainError {
    explicit OutOfDomain(const std::string& m) : DomainError(m) {}
};

struct InvalidRange : ConfigError {
    explicit InvalidRange(const std::string& m) : ConfigError(m) {}
};

struct EvenKeypointCount : ConfigError {
    explicit EvenKeypointCount(const std::string& m) : ConfigError(m) {}
};

struct EvenLatticeSize : ConfigError {
    explicit EvenLatticeSize(const std::string& m) : ConfigError(m) {}
};

struct InvalidArity : ConfigError {
    explicit InvalidArity(const std::string& m) : ConfigError(m) {}
};

struct ArityTooSmall : ConfigError {
    explicit ArityTooSmall(const std::string& m) : ConfigError(m) {}
};

struct InvalidHyperparameters : ConfigError {
    explicit InvalidHyperparameters(const std::string& m) : ConfigError(m) {}
};

/// Conditional maximizer asks a calibrator for a value outside its range;
/// carries the offending input dimension.
struct ConditionalMaximizerOutOfRange : DomainError {
    ConditionalMaximizerOutOfRange(std::size_t dim, const std::string& m)
        : DomainError(m), dim_(dim) {}

    std::size_t dim() const { return dim_; }

private:
    std::size_t dim_;
};

struct DegenerateLabels : DataError {
    explicit DegenerateLabels(const std::string& m) : DataError(m) {}
};

struct MissingColumn : DataError {
    explicit MissingColumn(const std::string& m) : DataError(m) {}
};

/// CSV cell that failed to parse; carries 1-based row and column.
struct ParseError : DataError {
    ParseError(std::size_t row, std::size_t col, const std::string& m)
        : DataError(m), row_(row), col_(col) {}

    std::size_t row() const { return row_; }
    std::size_t col() const { return col_; }

private:
    std::size_t row_;
    std::size_t col_;
};

struct EmptyDataset : DataError {
    explicit EmptyDataset(const std::string& m) : DataError(m) {}
};

}  // namespace gon
