#pragma once

#include <stdexcept>
#include <string>

namespace fuss {

enum class Errc {
    file_not_found,
    malformed_header,
    unsupported_encoding,
    io_error,
    invalid_argument,
    length_mismatch,
    sample_rate_mismatch,
    empty_input,
    non_finite,
    constraint_unsatisfiable,
    sampling_failure,
    missing_metadata,
    missing_manifest,
    missing_resource,
    degenerate_example,
};

const char* errc_name(Errc code) noexcept;

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit-code mapping) can branch without parsing text.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace fuss
