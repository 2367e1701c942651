#pragma once

#include <stdexcept>
#include <string>

namespace ulpsim {

/// Netlist text could not be parsed or elaborated into a circuit.
class NetlistError : public std::runtime_error {
public:
    explicit NetlistError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_ = 0;
};

class ParseError : public NetlistError {
public:
    using NetlistError::NetlistError;
};

class ElaborationError : public NetlistError {
public:
    using NetlistError::NetlistError;
};

/// Nonlinear solve ran out of homotopies or a time step refused to converge.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public ConvergenceError {
public:
    using ConvergenceError::ConvergenceError;
};

/// A waveform did not contain the feature being measured (e.g. missing edge).
class MeasurementError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the contract of an operation (bad bracket, bad range, ...).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ulpsim
