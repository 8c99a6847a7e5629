#pragma once

// Seeded synthetic days shaped like a fast-charging station on a day-ahead
// market: two price peaks (morning, evening) over night and mid-day troughs,
// and a low station base load with short charging spikes. Values are
// invented; only the shape is meant to be realistic.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fcsd/model.hpp"

namespace fcsd {

enum class ProfileKind { Fcs, Flat };

std::string_view to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(std::string_view name);

inline constexpr std::size_t kSyntheticSteps = 48;
inline constexpr double kSyntheticStepHours = 0.5;
/// 2024-01-01T00:00:00.
inline constexpr std::int64_t kSyntheticStart = 1704067200;

struct SyntheticDay {
    std::vector<std::int64_t> timestamps;
    DayInputs day;
};

/// Deterministic in (seed, kind) on every platform: draws come from
/// mt19937_64 and are mapped to [0, 1) without std distributions.
SyntheticDay gen_synthetic_day(std::uint64_t seed, ProfileKind kind);

struct SyntheticFiles {
    std::filesystem::path prices;
    std::filesystem::path load;
};

/// Writes prices.csv and load.csv into `dir` (created if missing).
SyntheticFiles write_synthetic_day(const SyntheticDay& day, const std::filesystem::path& dir);

/// Maximal runs of consecutive values strictly above `threshold`.
std::size_t count_episodes_above(std::span<const double> values, double threshold);

double median(std::span<const double> values);

}  // namespace fcsd
