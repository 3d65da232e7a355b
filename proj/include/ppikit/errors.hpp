#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ppikit {

enum class Errc {
    MalformedRow,
    MissingColumn,
    EmptyLabeledSet,
    RankDeficientDesign,
    InsufficientLabeled,
    MissingPredictions,
    EmptyUnlabeled,
    InvalidLevel,
    TooFewLabeled,
    FoldMismatch,
    DegenerateTraining,
    TooFewSamples,
    DegenerateScale,
    EmptySample,
    DimensionMismatch,
    InvalidSpec,
    InfeasibleMechanism,
    IoError,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message),
          code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

inline std::string_view errc_name(Errc code) {
    switch (code) {
        case Errc::MalformedRow: return "MalformedRow";
        case Errc::MissingColumn: return "MissingColumn";
        case Errc::EmptyLabeledSet: return "EmptyLabeledSet";
        case Errc::RankDeficientDesign: return "RankDeficientDesign";
        case Errc::InsufficientLabeled: return "InsufficientLabeled";
        case Errc::MissingPredictions: return "MissingPredictions";
        case Errc::EmptyUnlabeled: return "EmptyUnlabeled";
        case Errc::InvalidLevel: return "InvalidLevel";
        case Errc::TooFewLabeled: return "TooFewLabeled";
        case Errc::FoldMismatch: return "FoldMismatch";
        case Errc::DegenerateTraining: return "DegenerateTraining";
        case Errc::TooFewSamples: return "TooFewSamples";
        case Errc::DegenerateScale: return "DegenerateScale";
        case Errc::EmptySample: return "EmptySample";
        case Errc::DimensionMismatch: return "DimensionMismatch";
        case Errc::InvalidSpec: return "InvalidSpec";
        case Errc::InfeasibleMechanism: return "InfeasibleMechanism";
        case Errc::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace ppikit
