#pragma once

#include <cstdint>
#include <string>

#include "predmon/policy.hpp"
#include "predmon/timeseries.hpp"

namespace predmon::synthetic {

/// Two corpus profiles: the default vitals-like domain and an alternate
/// domain with different periods, scales and threshold bands, used as the
/// transfer-learning target.
enum class Profile { Default, Alt };

struct SyntheticConfig {
    std::uint64_t seed = 7;
    std::size_t rows = 3000;
    /// Gaussian noise sigma as a fraction of each channel's oscillation range.
    double noise_fraction = 0.02;
    Profile profile = Profile::Default;
};

/// Three seeded sinusoid channels (hr, resp, temp) with distinct periods,
/// Gaussian noise, and occasional smooth excursions into every alert band of
/// the profile's threshold tables, so all actions occur. Deterministic in
/// the seed.
timeseries::TimeSeriesFrame generate(const SyntheticConfig& config);

/// Channel names a generated corpus carries, in frame order.
std::vector<std::string> channel_names();

/// Threshold table matching a profile's scale for one channel. The Default
/// profile returns policy::demo_table.
policy::ThresholdTable threshold_table(Profile profile, const std::string& channel);

Profile profile_from_name(const std::string& name);  // "default" | "alt"
std::string profile_name(Profile profile);

}  // namespace predmon::synthetic
