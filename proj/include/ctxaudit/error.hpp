#pragma once

#include <stdexcept>
#include <string>

namespace ctxaudit {

// Base for all toolkit errors. Subclasses mirror the failure classes the
// pipeline distinguishes: bad arguments, malformed data, backend transport
// failures, provider rejections, and degenerate audit states.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Malformed input data (exemplar files, config documents). Carries the
// offending record index when known.
class ParseError : public Error {
public:
    explicit ParseError(const std::string& what, long record_index = -1)
        : Error(what), record_index_(record_index) {}
    long record_index() const { return record_index_; }

private:
    long record_index_;
};

// Network-level failure after the retry budget is exhausted.
class TransportError : public Error {
public:
    using Error::Error;
};

// Non-retryable HTTP response from a provider.
class ProviderError : public Error {
public:
    ProviderError(const std::string& what, int status, std::string body_excerpt)
        : Error(what), status_(status), body_excerpt_(std::move(body_excerpt)) {}
    int status() const { return status_; }
    const std::string& body_excerpt() const { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

// All ensemble outputs unparseable, or no outputs at all.
class DegenerateEnsembleError : public Error {
public:
    using Error::Error;
};

// Threshold calibration cannot separate anything (all scores identical).
class CalibrationError : public Error {
public:
    using Error::Error;
};

class InvalidStateError : public Error {
public:
    using Error::Error;
};

}  // namespace ctxaudit
