#pragma once

#include <stdexcept>
#include <string>

namespace hmpc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class NotControllable : public Error {
public:
    using Error::Error;
};

class InvalidConstraintSet : public Error {
public:
    using Error::Error;
};

class InvalidParameter : public Error {
public:
    using Error::Error;
};

class SolverFailure : public Error {
public:
    using Error::Error;
};

class SingularKkt : public Error {
public:
    using Error::Error;
};

class InfeasibleInput : public Error {
public:
    using Error::Error;
};

class ResidualTooLarge : public Error {
public:
    using Error::Error;
};

class PoleOnGrid : public Error {
public:
    using Error::Error;
};

class InitialInfeasible : public Error {
public:
    using Error::Error;
};

class StepInfeasible : public Error {
public:
    using Error::Error;
};

class ScenarioError : public Error {
public:
    using Error::Error;
};

} // namespace hmpc
