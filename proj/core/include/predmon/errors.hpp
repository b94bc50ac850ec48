#pragma once

#include <stdexcept>
#include <string>

namespace predmon {

/// Base class for every error the engine raises on purpose. what() carries
/// a human-readable description; the concrete type carries the category.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- ingestion ---
struct MissingColumn : Error { using Error::Error; };
struct NonMonotonicTimestamps : Error { using Error::Error; };
struct IrregularSampling : Error { using Error::Error; };
struct EmptyAfterFiltering : Error { using Error::Error; };
struct FrameTooShort : Error { using Error::Error; };
struct ConstantChannel : Error { using Error::Error; };

// --- numerics ---
struct DimensionMismatch : Error { using Error::Error; };
struct NonFiniteGradient : Error { using Error::Error; };
struct NonFiniteValue : Error { using Error::Error; };
struct InvalidRate : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct ZeroActual : Error { using Error::Error; };

// --- environment / agent ---
struct EmptySequence : Error { using Error::Error; };
struct EpisodeFinished : Error { using Error::Error; };
struct InvalidAction : Error { using Error::Error; };
struct InsufficientMemory : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };
struct DivergedLoss : Error { using Error::Error; };

// --- persistence / configuration ---
struct IoError : Error { using Error::Error; };
struct ChecksumMismatch : Error { using Error::Error; };
struct VersionUnsupported : Error { using Error::Error; };
struct CheckpointMissing : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

}  // namespace predmon
