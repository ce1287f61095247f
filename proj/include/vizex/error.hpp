#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vizex {

// Every failure the engine reports. The service layer maps each code to
// exactly one machine-readable API code.
enum class ErrorCode {
    // ingest
    MissingFrame,
    DimensionMismatch,
    MalformedImage,
    MalformedManifest,
    MalformedRecord,
    FrameOutOfRange,
    DuplicateFrame,
    MalformedRow,
    // kpi-engine
    EmptyRegion,
    RegionTooSmall,
    UnknownExternal,
    // rdd-causal
    InsufficientData,
    DegenerateDesign,
    SeriesTooShort,
    // surrogate-baseline
    DegenerateLabels,
    // causal-query
    SyntaxError,
    UnknownMetric,
    UnknownKpi,
    // synth-lab
    InvalidSpec,
    // general
    InvalidArgument,
    IoError,
    ProjectInvalid,
    UnknownProject,
    UnknownSeries,
    FramesDisabled,
    PortInUse,
};

std::string_view to_string(ErrorCode code);

struct SourcePosition {
    int line = 1;
    int col = 1;
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::optional<SourcePosition> pos = std::nullopt)
        : std::runtime_error(std::move(message)), code_(code), pos_(pos) {}

    ErrorCode code() const noexcept { return code_; }
    const std::optional<SourcePosition>& position() const noexcept { return pos_; }

private:
    ErrorCode code_;
    std::optional<SourcePosition> pos_;
};

}  // namespace vizex
