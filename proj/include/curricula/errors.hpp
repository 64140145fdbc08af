#pragma once

#include <stdexcept>
#include <string>

namespace curricula {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Gateway failures. Auth and BadRequest are terminal; Transient failures are
/// retried by the gateway and surface as Exhausted once retries run out.
class GatewayError : public Error {
public:
    enum class Kind { Transient, Exhausted, Auth, BadRequest };

    GatewayError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class UnknownPurpose : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class UnknownNodeId : public Error {
public:
    using Error::Error;
};

class NoFencedBlock : public Error {
public:
    using Error::Error;
};

class EmptyResult : public Error {
public:
    using Error::Error;
};

class ExtractionFailed : public Error {
public:
    using Error::Error;
};

class DegenerateSession : public Error {
public:
    using Error::Error;
};

class DegenerateSyllabus : public Error {
public:
    using Error::Error;
};

class SelectionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyCompletion : public Error {
public:
    using Error::Error;
};

class EmptyDataset : public Error {
public:
    using Error::Error;
};

class NoValidResults : public Error {
public:
    using Error::Error;
};

class MissingMetadata : public Error {
public:
    using Error::Error;
};

class InvalidLoss : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A pipeline stage whose per-item failure rate exceeded the configured
/// threshold.
class StageFailure : public Error {
public:
    using Error::Error;
};

class ConfigDrift : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace curricula
