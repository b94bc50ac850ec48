#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace predmon::policy {

/// One half-open value band [lo, hi) mapped to a discrete action. Bounds may
/// be -inf / +inf. Exactly one band in a table carries severity 0 (the
/// "normal, no alert" band). Team labels and severities may repeat across
/// bands; action ids never do.
struct Band {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    int action = 0;
    std::string team;
    int severity = 0;

    bool contains(double value) const { return value >= lo && value < hi; }
};

/// Per-channel ordered bands partitioning the real line. Each band is a
/// distinct action, so the action space size equals the band count.
struct ThresholdTable {
    std::string channel;
    std::string units;  // advisory; used by the range-mismatch lint
    std::vector<Band> bands;

    std::size_t action_count() const { return bands.size(); }

    /// The band owning a given action id; throws InvalidAction if unknown.
    const Band& band_for_action(int action) const;
};

/// Discrete action space derived from a table.
struct ActionSpace {
    std::size_t size = 0;
    std::vector<std::string> labels;
};

ActionSpace action_space(const ThresholdTable& table);

/// The action whose band contains the value (lower-inclusive bounds).
/// Throws NonFiniteValue for NaN/inf inputs.
int correct_action(const ThresholdTable& table, double value);

/// Structural validation: gaps, overlaps, duplicate action ids, non-compact
/// id range, missing or duplicated severity-0 band. Empty result means valid.
std::vector<std::string> validate_table(const ThresholdTable& table);

/// Throwing wrapper used at config load time.
void require_valid(const ThresholdTable& table);

/// Lint for the unit-mismatch failure mode: if more than the given fraction
/// of observed values falls outside the severity-0 band, the table's scale
/// probably does not match the data. Returns a warning string or empty.
std::string range_mismatch_warning(const ThresholdTable& table,
                                   const std::vector<double>& observed,
                                   double alert_fraction_threshold = 0.9);

/// Lint: severity ranks should not decrease moving outward from the normal
/// band on either side. Returns a warning string or empty.
std::string severity_monotonicity_warning(const ThresholdTable& table);

/// Load / save the JSON table format:
///   {"channel": ..., "units": ..., "bands": [{"lo","hi","action","team","severity"}]}
/// "lo"/"hi" accept numbers or the strings "-inf" / "+inf".
ThresholdTable table_from_json_text(const std::string& text);
ThresholdTable load_table(const std::filesystem::path& path);
std::string table_to_json_text(const ThresholdTable& table);

/// Illustrative demo tables for the synthetic corpus channels (hr, resp,
/// temp). Values are configuration defaults, not clinical guidance.
ThresholdTable demo_table(const std::string& channel);

}  // namespace predmon::policy
