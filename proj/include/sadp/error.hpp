#pragma once

#include <stdexcept>
#include <string>

namespace sadp {

// Error classes map onto distinct CLI exit codes (see exit_code()).
enum class ErrorKind {
    Shape = 2,
    Domain = 3,
    Numeric = 4,
    Parse = 5,
    Fit = 6,
    Data = 7,
    Config = 8,
    UnsupportedVersion = 9,
    Io = 10,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int exit_code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

struct ShapeError : Error {
    explicit ShapeError(const std::string& w) : Error(ErrorKind::Shape, w) {}
};
struct DomainError : Error {
    explicit DomainError(const std::string& w) : Error(ErrorKind::Domain, w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error(ErrorKind::Numeric, w) {}
};
struct ParseError : Error {
    explicit ParseError(const std::string& w) : Error(ErrorKind::Parse, w) {}
};
struct FitError : Error {
    FitError(const std::string& w, double achieved_residual)
        : Error(ErrorKind::Fit, w), achieved_residual(achieved_residual) {}
    double achieved_residual;
};
struct DataError : Error {
    explicit DataError(const std::string& w) : Error(ErrorKind::Data, w) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};
struct UnsupportedVersionError : Error {
    explicit UnsupportedVersionError(const std::string& w)
        : Error(ErrorKind::UnsupportedVersion, w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

// Wraps an error raised inside a pipeline stage; keeps the original kind.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& inner)
        : Error(inner.kind(), "[" + stage + "] " + inner.what()), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace sadp
