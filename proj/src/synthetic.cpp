#include "fcsd/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "fcsd/csv_io.hpp"

namespace fcsd {

namespace {

class Draws {
public:
    explicit Draws(std::uint64_t seed) : rng_(seed) {}

    double unit() { return double(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    int integer(int lo, int hi) { return lo + static_cast<int>(unit() * double(hi - lo + 1)); }

private:
    std::mt19937_64 rng_;
};

double bump(double hour, double center, double width) {
    const double d = (hour - center) / width;
    return std::exp(-0.5 * d * d);
}

std::vector<double> fcs_prices(Draws& rng) {
    std::vector<double> p(kSyntheticSteps);
    for (std::size_t t = 0; t < p.size(); ++t) {
        const double h = double(t) * kSyntheticStepHours;
        double v = 320.0 + 260.0 * bump(h, 7.75, 1.3) + 330.0 * bump(h, 19.25, 1.6) - 140.0 * bump(h, 3.0, 1.8) -
                   110.0 * bump(h, 14.0, 1.8);
        v += rng.uniform(-25.0, 25.0);
        p[t] = std::round(v * 100.0) / 100.0;
    }
    return p;
}

std::vector<double> fcs_load(Draws& rng) {
    std::vector<double> l(kSyntheticSteps);
    for (double& v : l) v = std::round(rng.uniform(0.12, 0.2) * 1000.0) / 1000.0;

    // Six 8-step windows; four or five of them hold one spike episode each.
    // A spike starts 1..4 steps into its window and lasts 1..3 steps, so
    // episodes never touch.
    std::array<int, 6> windows{0, 1, 2, 3, 4, 5};
    const int count = rng.unit() < 0.5 ? 4 : 5;
    for (int i = 0; i < count; ++i) std::swap(windows[std::size_t(i)], windows[std::size_t(rng.integer(i, 5))]);
    for (int i = 0; i < count; ++i) {
        const int start = windows[std::size_t(i)] * 8 + rng.integer(1, 4);
        const int length = rng.integer(1, 3);
        const double magnitude = rng.uniform(0.8, 1.6);
        for (int k = 0; k < length; ++k) {
            l[std::size_t(start + k)] = std::round((magnitude + rng.uniform(-0.05, 0.05)) * 1000.0) / 1000.0;
        }
    }
    return l;
}

}  // namespace

std::string_view to_string(ProfileKind kind) { return kind == ProfileKind::Fcs ? "fcs" : "flat"; }

ProfileKind profile_kind_from_string(std::string_view name) {
    if (name == "fcs") return ProfileKind::Fcs;
    if (name == "flat") return ProfileKind::Flat;
    throw InputError(fmt::format("unknown profile kind '{}' (expected fcs or flat)", name));
}

SyntheticDay gen_synthetic_day(std::uint64_t seed, ProfileKind kind) {
    std::vector<double> prices;
    std::vector<double> load;
    if (kind == ProfileKind::Flat) {
        prices.assign(kSyntheticSteps, 300.0);
        load.assign(kSyntheticSteps, 0.2);
    } else {
        Draws rng(seed);
        prices = fcs_prices(rng);
        load = fcs_load(rng);
    }
    return {regular_timestamps(kSyntheticStart, kSyntheticSteps, kSyntheticStepHours),
            DayInputs(TimeGrid(kSyntheticSteps, kSyntheticStepHours), PriceSeries(std::move(prices)),
                      LoadProfile(std::move(load)))};
}

SyntheticFiles write_synthetic_day(const SyntheticDay& d, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    SyntheticFiles files{dir / "prices.csv", dir / "load.csv"};
    auto write = [&](const std::filesystem::path& path, std::string_view header, std::span<const double> values) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
        write_series_csv(out, header, d.timestamps, values);
    };
    write(files.prices, kPricesHeader, d.day.prices().values());
    write(files.load, kLoadHeader, d.day.load().values());
    return files;
}

std::size_t count_episodes_above(std::span<const double> values, double threshold) {
    std::size_t episodes = 0;
    bool inside = false;
    for (double v : values) {
        const bool above = v > threshold;
        if (above && !inside) ++episodes;
        inside = above;
    }
    return episodes;
}

double median(std::span<const double> values) {
    if (values.empty()) throw InputError("median of an empty series");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace fcsd
