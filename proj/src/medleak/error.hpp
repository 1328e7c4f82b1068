#pragma once

#include <stdexcept>
#include <string>

namespace medleak {

enum class ErrorCode {
    InvalidArgument,
    Io,
    MalformedCapture,
    EmptyPayload,
    EmptyCorpus,
    EmptyRegistry,
    Config,
    Dictionary,
    UnknownScenario,
    InvalidCorpusSpec,
};

const char* to_string(ErrorCode code);

// Single exception type for the core; the C layer maps `code()` onto
// medleak_status values.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace medleak
