#pragma once

// CSV formats for price, load and schedule series. Timestamps are ISO-8601
// local times without zone (a trailing 'Z' is accepted and dropped); they are
// handled as seconds since 1970-01-01 on a naive calendar.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcsd/domain.hpp"
#include "fcsd/model.hpp"

namespace fcsd {

/// Malformed file content; the message names the file and 1-based line.
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what);

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

inline constexpr std::string_view kPricesHeader = "timestamp,price_dkk_per_mwh";
inline constexpr std::string_view kLoadHeader = "timestamp,load_mw";
inline constexpr std::string_view kScheduleHeader = "timestamp,price_dkk_per_mwh,load_mw,p_ch_mw,p_dis_mw,p_in_mw,p_out_mw,soc";

/// Throws InputError on anything but YYYY-MM-DDTHH:MM[:SS][Z].
std::int64_t parse_timestamp(std::string_view text);
std::string format_timestamp(std::int64_t seconds);

/// `count` timestamps starting at `start`, spaced by `step_hours`.
std::vector<std::int64_t> regular_timestamps(std::int64_t start, std::size_t count, double step_hours);

struct TimedSeries {
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
};

/// Reads a two-column series with the given header. Rows must be strictly
/// increasing and spaced exactly `step_hours` apart.
TimedSeries read_series_csv(std::istream& in, std::string_view header, double step_hours,
                            const std::string& source = "<input>");
TimedSeries read_series_csv(const std::filesystem::path& path, std::string_view header, double step_hours);

PriceSeries parse_prices_csv(const std::filesystem::path& path, double step_hours = 0.5);
LoadProfile parse_load_csv(const std::filesystem::path& path, double step_hours = 0.5);

/// A day read from a price file and a load file with identical timestamps.
struct TimedDay {
    std::vector<std::int64_t> timestamps;
    DayInputs day;
};

TimedDay load_day(const std::filesystem::path& prices, const std::filesystem::path& load, double step_hours);

void write_series_csv(std::ostream& out, std::string_view header, const std::vector<std::int64_t>& timestamps,
                      std::span<const double> values);

/// Emitted schedule: one row per step, soc is the state after the step.
struct ScheduleTable {
    std::vector<std::int64_t> timestamps;
    std::vector<double> prices;
    std::vector<double> load;
    DispatchSchedule schedule;
    std::vector<double> p_in;
    std::vector<double> p_out;
    std::vector<double> soc;
};

ScheduleTable make_schedule_table(const std::vector<std::int64_t>& timestamps, const DayInputs& day,
                                  const DispatchSchedule& schedule, const BatteryParams& bat);

void write_schedule_csv(std::ostream& out, const ScheduleTable& table);
ScheduleTable read_schedule_csv(std::istream& in, const std::string& source = "<input>");
ScheduleTable read_schedule_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace fcsd
