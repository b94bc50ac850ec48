#include "predmon/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "predmon/errors.hpp"
#include "predmon/rng.hpp"

namespace predmon::synthetic {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct ChannelShape {
    const char* name;
    double base;
    double amplitude;
    double period;
    double phase;
};

const ChannelShape kDefaultShapes[3] = {
    {"hr", 75.5, 12.0, 97.0, 0.0},
    {"resp", 16.5, 3.0, 61.0, 2.1},
    {"temp", 37.0, 0.6, 149.0, 4.2},
};

const ChannelShape kAltShapes[3] = {
    {"hr", 60.0, 8.0, 53.0, 1.0},
    {"resp", 24.0, 4.0, 37.0, 3.1},
    {"temp", 20.0, 6.0, 211.0, 5.2},
};

}  // namespace

std::vector<std::string> channel_names() { return {"hr", "resp", "temp"}; }

policy::ThresholdTable threshold_table(Profile profile, const std::string& channel) {
    if (profile == Profile::Default) return policy::demo_table(channel);

    const double inf = std::numeric_limits<double>::infinity();
    policy::ThresholdTable t;
    t.channel = channel;
    if (channel == "hr") {
        t.units = "bpm";
        t.bands = {{-inf, 40.0, 3, "met", 2},
                   {40.0, 48.0, 1, "ward-nurse", 1},
                   {48.0, 72.0, 0, "none", 0},
                   {72.0, 80.0, 2, "ward-nurse", 1},
                   {80.0, inf, 4, "met", 2}};
    } else if (channel == "resp") {
        t.units = "breaths/min";
        t.bands = {{-inf, 12.0, 3, "met", 2},
                   {12.0, 18.0, 1, "ward-nurse", 1},
                   {18.0, 30.0, 0, "none", 0},
                   {30.0, 36.0, 2, "ward-nurse", 1},
                   {36.0, inf, 4, "met", 2}};
    } else if (channel == "temp") {
        t.units = "degC";
        t.bands = {{-inf, 0.0, 3, "met", 2},
                   {0.0, 8.0, 1, "ward-nurse", 1},
                   {8.0, 32.0, 0, "none", 0},
                   {32.0, 38.0, 2, "ward-nurse", 1},
                   {38.0, inf, 4, "met", 2}};
    } else {
        throw ConfigError("no synthetic threshold table for channel '" + channel + "'");
    }
    return t;
}

Profile profile_from_name(const std::string& name) {
    if (name == "default") return Profile::Default;
    if (name == "alt") return Profile::Alt;
    throw ConfigError("unknown synthetic profile '" + name + "' (want default|alt)");
}

std::string profile_name(Profile profile) {
    return profile == Profile::Default ? "default" : "alt";
}

namespace {

/// Draw an excursion target strictly inside a band, with enough margin that
/// noise cannot push the peak across the boundary. Infinite bands anchor on
/// their finite edge using the width of the neighbouring band.
double sample_in_band(const policy::Band& band, double neighbour_width, Rng& rng) {
    const double inf = std::numeric_limits<double>::infinity();
    if (band.lo == -inf) {
        return rng.uniform(band.hi - 1.5 * neighbour_width, band.hi - 0.3 * neighbour_width);
    }
    if (band.hi == inf) {
        return rng.uniform(band.lo + 0.3 * neighbour_width, band.lo + 1.5 * neighbour_width);
    }
    const double width = band.hi - band.lo;
    return rng.uniform(band.lo + 0.2 * width, band.hi - 0.2 * width);
}

}  // namespace

timeseries::TimeSeriesFrame generate(const SyntheticConfig& config) {
    if (config.rows == 0) throw ConfigError("synthetic corpus needs at least one row");
    const ChannelShape* shapes =
        config.profile == Profile::Default ? kDefaultShapes : kAltShapes;

    timeseries::TimeSeriesFrame frame;
    frame.channels = channel_names();
    frame.timestamps.resize(config.rows);
    for (std::size_t i = 0; i < config.rows; ++i)
        frame.timestamps[i] = static_cast<std::int64_t>(i);
    frame.values.assign(config.rows * 3, 0.0);

    for (std::size_t c = 0; c < 3; ++c) {
        const ChannelShape& shape = shapes[c];
        const auto table = threshold_table(config.profile, shape.name);
        // Bands sorted low to high: [severe-low, mild-low, normal, mild-high,
        // severe-high]; excursions cycle through the four alert bands.
        auto bands = table.bands;
        std::sort(bands.begin(), bands.end(),
                  [](const policy::Band& a, const policy::Band& b) { return a.lo < b.lo; });
        const std::size_t excursion_bands[4] = {3, 1, 4, 0};  // mild-high, mild-low, ...

        Rng rng = Rng::stream(config.seed,
                              "synthetic/" + profile_name(config.profile) + "/" + shape.name);
        const double sigma = config.noise_fraction * 2.0 * shape.amplitude;
        const double start_probability = 0.004;

        bool active = false;
        std::size_t excursion_start = 0;
        std::size_t excursion_length = 0;
        double excursion_target = 0.0;
        std::size_t excursion_count = 0;
        // The first excursion lands early so even a short monitoring window
        // sees alert-band values; later ones arrive stochastically.
        const std::size_t first_excursion_at = 15 + rng.below(10);

        for (std::size_t t = 0; t < config.rows; ++t) {
            const double clean =
                shape.base +
                shape.amplitude *
                    std::sin(2.0 * kPi * static_cast<double>(t) / shape.period + shape.phase);

            const bool force_first = excursion_count == 0 && t >= first_excursion_at;
            if (!active && (force_first || rng.uniform01() < start_probability)) {
                active = true;
                excursion_start = t;
                excursion_length = 16 + rng.below(25);
                const auto& band = bands[excursion_bands[excursion_count % 4]];
                const double neighbour_width = bands[2].hi - bands[2].lo;
                excursion_target = sample_in_band(band, neighbour_width, rng);
                ++excursion_count;
            }

            double value = clean;
            if (active) {
                const double progress = static_cast<double>(t - excursion_start) /
                                        static_cast<double>(excursion_length);
                if (progress >= 1.0) {
                    active = false;
                } else {
                    const double w = std::sin(kPi * progress);
                    value = (1.0 - w * w) * clean + w * w * excursion_target;
                }
            }
            frame.at(t, c) = value + rng.normal(0.0, sigma);
        }
    }
    return frame;
}

}  // namespace predmon::synthetic
