#include "volclass/errors.hpp"

namespace volclass {

std::string_view to_string(Errc code) {
    switch (code) {
    case Errc::SizeMismatch: return "SizeMismatch";
    case Errc::BadMeta: return "BadMeta";
    case Errc::IoFailure: return "IoFailure";
    case Errc::NonFinite: return "NonFinite";
    case Errc::BadBins: return "BadBins";
    case Errc::BadFactor: return "BadFactor";
    case Errc::BadShape: return "BadShape";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::EmptySampleSet: return "EmptySampleSet";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::DuplicateClass: return "DuplicateClass";
    case Errc::BadConfig: return "BadConfig";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

} // namespace volclass
