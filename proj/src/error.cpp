#include "vizex/error.hpp"

namespace vizex {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingFrame: return "MissingFrame";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::MalformedImage: return "MalformedImage";
        case ErrorCode::MalformedManifest: return "MalformedManifest";
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
        case ErrorCode::DuplicateFrame: return "DuplicateFrame";
        case ErrorCode::MalformedRow: return "MalformedRow";
        case ErrorCode::EmptyRegion: return "EmptyRegion";
        case ErrorCode::RegionTooSmall: return "RegionTooSmall";
        case ErrorCode::UnknownExternal: return "UnknownExternal";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::DegenerateDesign: return "DegenerateDesign";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::DegenerateLabels: return "DegenerateLabels";
        case ErrorCode::SyntaxError: return "SyntaxError";
        case ErrorCode::UnknownMetric: return "UnknownMetric";
        case ErrorCode::UnknownKpi: return "UnknownKpi";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::ProjectInvalid: return "ProjectInvalid";
        case ErrorCode::UnknownProject: return "UnknownProject";
        case ErrorCode::UnknownSeries: return "UnknownSeries";
        case ErrorCode::FramesDisabled: return "FramesDisabled";
        case ErrorCode::PortInUse: return "PortInUse";
    }
    return "Unknown";
}

}  // namespace vizex
