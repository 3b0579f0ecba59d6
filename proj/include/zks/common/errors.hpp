#pragma once

#include <stdexcept>
#include <string>

namespace zks {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid argument, shape or configuration.
class ParameterError : public Error {
public:
    using Error::Error;
};

class DegenerateStatsError : public Error {
public:
    using Error::Error;
};

class QuantizationError : public Error {
public:
    using Error::Error;
};

class PolicyError : public Error {
public:
    using Error::Error;
};

class CompileError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

class RegistryError : public Error {
public:
    using Error::Error;
};

class ProverError : public Error {
public:
    using Error::Error;
};

class AppendError : public Error {
public:
    using Error::Error;
};

// Malformed bytes or files.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace zks
