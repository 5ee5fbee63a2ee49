#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace accel {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// event_log
class MalformedRecord : public Error {
public:
    using Error::Error;
};
class EmptyAfterNormalization : public Error {
public:
    using Error::Error;
};

// sequence_miner / config ranges
class InvalidConfig : public Error {
public:
    using Error::Error;
};

// query_repr
class EmptyProfile : public Error {
public:
    using Error::Error;
};

// intent_filter
class NotConverted : public Error {
public:
    using Error::Error;
};

// llm_alternator
class EmptyJourney : public Error {
public:
    using Error::Error;
};
class Timeout : public Error {
public:
    using Error::Error;
};
class TransportError : public Error {
public:
    using Error::Error;
};
class NonRetryableStatus : public Error {
public:
    NonRetryableStatus(int status, const std::string& what)
        : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};
class UnparseableResponse : public Error {
public:
    using Error::Error;
};
class SchemaViolation : public Error {
public:
    using Error::Error;
};
class AllFiltered : public Error {
public:
    using Error::Error;
};

// suggestion_store
class InvariantViolation : public Error {
public:
    using Error::Error;
};
class IoError : public Error {
public:
    using Error::Error;
};
class CorruptSnapshot : public Error {
public:
    CorruptSnapshot(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// eval_harness
class ZeroBaseline : public Error {
public:
    using Error::Error;
};

// cli
class ConfigError : public Error {
public:
    using Error::Error;
};
class StageError : public Error {
public:
    using Error::Error;
};

}  // namespace accel
