#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace volclass {

enum class Errc {
    SizeMismatch,
    BadMeta,
    IoFailure,
    NonFinite,
    BadBins,
    BadFactor,
    BadShape,
    ShapeMismatch,
    EmptySampleSet,
    BadMagic,
    UnsupportedVersion,
    CorruptFile,
    UnknownLabel,
    DuplicateClass,
    BadConfig,
};

std::string_view to_string(Errc code);

/// Data-level failure raised by every module. The code identifies the
/// failure class; what() carries a human-readable message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message);

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace volclass
