#pragma once
// Exception taxonomy for the whole library. Callers that need to distinguish
// failure classes catch the concrete type; everything derives from Error.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reasongraph {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// trace ingest
struct EmptyTrace : Error {
    using Error::Error;
};
struct ParseError : Error {
    size_t line = 0;
    ParseError(const std::string& msg, size_t line_no)
        : Error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};
struct DuplicateTraceId : Error {
    size_t line = 0;
    DuplicateTraceId(const std::string& id, size_t line_no)
        : Error("duplicate trace_id '" + id + "' at line " + std::to_string(line_no)), line(line_no) {}
};

// embeddings
struct ProviderError : Error {
    int attempts = 0;
    bool retryable = false;
    ProviderError(const std::string& msg, int attempts_made = 0, bool can_retry = false)
        : Error(msg), attempts(attempts_made), retryable(can_retry) {}
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct ZeroVector : Error {
    using Error::Error;
};

// llm gateway
struct TooFewSteps : Error {
    using Error::Error;
};
struct MalformedOutput : Error {
    using Error::Error;
};
struct BackendUnavailable : Error {
    int retries = 0;
    explicit BackendUnavailable(const std::string& msg, int retries_done = 0)
        : Error(msg), retries(retries_done) {}
};
struct RateLimited : Error {
    using Error::Error;
};
struct ContextOverflow : Error {
    using Error::Error;
};

// clustering ensemble
struct AlignmentFailure : Error {
    using Error::Error;
};
struct NoValidCandidate : Error {
    using Error::Error;
};

// edge estimator
struct KMismatch : Error {
    using Error::Error;
};
struct SamplingExhausted : Error {
    using Error::Error;
};

// graph metrics
struct InvalidGraph : Error {
    using Error::Error;
};
struct UndefinedMetric : Error {
    using Error::Error;
};

// analysis
struct DegenerateInput : Error {
    using Error::Error;
};

// io / config
struct IoError : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

} // namespace reasongraph
