#pragma once

#include <stdexcept>
#include <string>

namespace kelab {

// Exit-code classes used by the command line runner.
enum class ErrorKind { Config = 1, Validation = 1, Solver = 2, Io = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error(ErrorKind::Config, w) {}
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& w) : Error(ErrorKind::Validation, w) {}
};

struct SolverError : Error {
    explicit SolverError(const std::string& w) : Error(ErrorKind::Solver, w) {}
};

struct IoError : Error {
    explicit IoError(const std::string& w) : Error(ErrorKind::Io, w) {}
};

}  // namespace kelab
