#pragma once

#include <stdexcept>
#include <string>

namespace scenebench {

// Process exit codes. BSD sysexits values where one fits the failure class.
enum class ErrorCode {
    Ok = 0,
    Usage = 64,     // bad flags or arguments
    Data = 65,      // malformed input content
    NoInput = 66,   // missing input file
    Internal = 70,  // bug or broken invariant
    Io = 74,        // filesystem or network failure
    Auth = 77,      // missing or rejected credentials
    Config = 78,    // invalid configuration
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::Ok: return "ok";
        case ErrorCode::Usage: return "usage";
        case ErrorCode::Data: return "data";
        case ErrorCode::NoInput: return "no_input";
        case ErrorCode::Internal: return "internal";
        case ErrorCode::Io: return "io";
        case ErrorCode::Auth: return "auth";
        case ErrorCode::Config: return "config";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline Error usage_error(std::string m) { return Error(ErrorCode::Usage, std::move(m)); }
inline Error data_error(std::string m) { return Error(ErrorCode::Data, std::move(m)); }
inline Error no_input_error(std::string m) { return Error(ErrorCode::NoInput, std::move(m)); }
inline Error internal_error(std::string m) { return Error(ErrorCode::Internal, std::move(m)); }
inline Error io_error(std::string m) { return Error(ErrorCode::Io, std::move(m)); }
inline Error auth_error(std::string m) { return Error(ErrorCode::Auth, std::move(m)); }
inline Error config_error(std::string m) { return Error(ErrorCode::Config, std::move(m)); }

}  // namespace scenebench
