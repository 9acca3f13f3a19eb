#pragma once

#include <stdexcept>
#include <string>

namespace firescope {

/// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- domain / parsing ---

class UnparseableLabel : public Error {
public:
    explicit UnparseableLabel(const std::string& text, const std::string& reason)
        : Error("unparseable label: " + reason + " in \"" + text + "\""), text_(text) {}
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

// --- manifest / ingestion ---

class ManifestParseError : public Error {
public:
    ManifestParseError(std::size_t line, const std::string& reason)
        : Error("manifest line " + std::to_string(line) + ": " + reason), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateId : public Error {
public:
    explicit DuplicateId(const std::string& id) : Error("duplicate record id: " + id) {}
};

class MissingFrontView : public Error {
public:
    explicit MissingFrontView(const std::string& id, const std::string& detail)
        : Error("record " + id + ": " + detail) {}
};

class InsufficientRecords : public Error {
public:
    InsufficientRecords(const std::string& category, std::size_t wanted, std::size_t have)
        : Error("insufficient records for " + category + ": wanted " + std::to_string(wanted) +
                ", have " + std::to_string(have)) {}
};

class ImageReadError : public Error {
public:
    explicit ImageReadError(const std::string& uri, const std::string& reason)
        : Error("cannot read image " + uri + ": " + reason) {}
};

class UnsupportedFormat : public Error {
public:
    explicit UnsupportedFormat(const std::string& uri)
        : Error("unsupported image format: " + uri) {}
};

// --- provider / transport ---

class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error("transport: " + what) {}
};

class TimeoutError : public TransportError {
public:
    explicit TimeoutError(const std::string& what) : TransportError("timeout: " + what) {}
};

class RateLimited : public Error {
public:
    explicit RateLimited(int retry_after_s = 0)
        : Error("rate limited (retry after " + std::to_string(retry_after_s) + "s)"),
          retry_after_s_(retry_after_s) {}
    int retry_after_s() const { return retry_after_s_; }

private:
    int retry_after_s_;
};

class EndpointError : public Error {
public:
    EndpointError(int status, const std::string& body)
        : Error("endpoint returned " + std::to_string(status) + ": " + body), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

// --- pipelines ---

class ClassificationUnparseable : public Error {
public:
    ClassificationUnparseable(const std::string& household_id, const std::string& raw_text)
        : Error("household " + household_id + ": no parseable label in \"" + raw_text + "\""),
          household_id_(household_id), raw_text_(raw_text) {}
    const std::string& household_id() const { return household_id_; }
    const std::string& raw_text() const { return raw_text_; }

private:
    std::string household_id_;
    std::string raw_text_;
};

class IndicatorParseError : public Error {
public:
    IndicatorParseError(const std::string& household_id, const std::string& reason)
        : Error("household " + household_id + ": indicator parse failed: " + reason) {}
};

// --- similarity / embeddings ---

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t a, std::size_t b)
        : Error("embedding dimension mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class ZeroVector : public Error {
public:
    ZeroVector() : Error("zero-norm embedding has no direction") {}
};

class EmptyGroup : public Error {
public:
    explicit EmptyGroup(const std::string& category) : Error("empty image group: " + category) {}
};

class MissingEmbedding : public Error {
public:
    explicit MissingEmbedding(const std::string& uri) : Error("no embedding for uri: " + uri) {}
};

// --- evaluation / reports ---

class EmptyEvaluation : public Error {
public:
    EmptyEvaluation() : Error("evaluation over zero records") {}
};

class JoinError : public Error {
public:
    explicit JoinError(const std::string& what) : Error("join: " + what) {}
};

class PairingError : public Error {
public:
    explicit PairingError(const std::string& what) : Error("pairing: " + what) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config: " + what) {}
};

}  // namespace firescope
