#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "predmon/agent.hpp"
#include "predmon/forecaster.hpp"
#include "predmon/neural.hpp"

namespace predmon::io {

/// Versioned binary checkpoint container.
///
/// Layout, all integers and doubles little-endian:
///   "PMCP" magic, u32 version, u8 kind (1 forecaster / 2 qnetwork),
///   u64 header length + JSON header (dims, optimizer config, extras),
///   u64 parameter count + raw f64 parameters in the model's flat order,
///   u64 moment count + Adam m then v arrays + u64 Adam step,
///   (forecaster) u64 channel count + shift + scale doubles + u8 method,
///   u64 FNV-1a checksum over everything above.
///
/// Parameters are stored as raw 64-bit floats, so a load reproduces the
/// saved model bit for bit.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct ForecasterCheckpoint {
    forecaster::ForecastNetwork network;
    neural::AdamState optimizer;
    std::string config_snapshot;  // JSON text, free-form
};

struct QNetworkCheckpoint {
    agent::QNetwork network;
    neural::AdamState optimizer;
    double epsilon = 0.0;
    std::string config_snapshot;
};

void save_forecaster(const std::filesystem::path& path, const ForecasterCheckpoint& ckpt);
ForecasterCheckpoint load_forecaster(const std::filesystem::path& path);

void save_qnetwork(const std::filesystem::path& path, const QNetworkCheckpoint& ckpt);
QNetworkCheckpoint load_qnetwork(const std::filesystem::path& path);

/// Peek at the kind byte without loading the payload: "forecaster",
/// "qnetwork". Throws like the loaders on malformed files.
std::string checkpoint_kind(const std::filesystem::path& path);

}  // namespace predmon::io
