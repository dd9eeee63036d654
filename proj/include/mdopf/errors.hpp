#pragma once

#include <stdexcept>
#include <string>

namespace mdopf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input-side failures (CLI exit code 3).
class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& json_path, const std::string& what)
        : InputError(json_path + ": " + what), path_(json_path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

class UnitError : public InputError {
public:
    using InputError::InputError;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Solver-side failures (CLI exit code 2).
class SolverError : public Error {
public:
    using Error::Error;
};

class CycleDetected : public SolverError {
public:
    using SolverError::SolverError;
};

class NonSquareSystem : public SolverError {
public:
    using SolverError::SolverError;
};

class StructurallySingular : public SolverError {
public:
    using SolverError::SolverError;
};

class NumericallySingular : public SolverError {
public:
    using SolverError::SolverError;
};

class NotConverged : public SolverError {
public:
    using SolverError::SolverError;
};

class ZeroVoltagePhase : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularBranchVoltage : public SolverError {
public:
    using SolverError::SolverError;
};

class NegativeSquaredVoltage : public SolverError {
public:
    using SolverError::SolverError;
};

// Experiment-level failures.
class EmptyAfterExclusion : public Error {
public:
    using Error::Error;
};

class ZeroPositiveSequence : public Error {
public:
    using Error::Error;
};

class NoFeasibleAngle : public Error {
public:
    using Error::Error;
};

} // namespace mdopf
