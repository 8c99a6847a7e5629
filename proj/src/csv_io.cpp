#include "fcsd/csv_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <fmt/format.h>

namespace fcsd {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : InputError(fmt::format("{}:{}: {}", source, line, what)), line_(line) {}

namespace {

int parse_fixed(std::string_view text, std::size_t pos, std::size_t len) {
    int v = 0;
    const char* first = text.data() + pos;
    const auto res = std::from_chars(first, first + len, v);
    if (res.ec != std::errc() || res.ptr != first + len) throw InputError("");
    return v;
}

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_number(std::string_view field, const std::string& source, std::size_t line, std::string_view column) {
    field = trim(field);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
        throw ParseError(source, line, fmt::format("column {}: '{}' is not a finite number", column, field));
    }
    return v;
}

std::int64_t step_seconds(double step_hours) {
    const double s = step_hours * 3600.0;
    if (!(step_hours > 0.0) || std::abs(s - std::round(s)) > 1e-6) {
        throw InputError(fmt::format("step of {} h is not a positive whole number of seconds", step_hours));
    }
    return static_cast<std::int64_t>(std::llround(s));
}

struct Rows {
    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<double>> columns;
};

// Reads a header-checked CSV whose first column is a timestamp and the rest
// numbers. `step` of 0 means the spacing is taken from the first two rows.
Rows read_rows(std::istream& in, std::string_view header, std::int64_t step, const std::string& source) {
    const auto names = split(header);
    Rows rows;
    rows.columns.resize(names.size() - 1);

    std::string line;
    std::size_t lineno = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view text = trim(line);
        if (!seen_header) {
            if (text != header) {
                throw ParseError(source, lineno, fmt::format("expected header '{}', found '{}'", header, text));
            }
            seen_header = true;
            continue;
        }
        if (text.empty()) continue;
        const auto fields = split(text);
        if (fields.size() != names.size()) {
            throw ParseError(source, lineno, fmt::format("expected {} fields, found {}", names.size(), fields.size()));
        }
        std::int64_t ts = 0;
        try {
            ts = parse_timestamp(trim(fields[0]));
        } catch (const InputError&) {
            throw ParseError(source, lineno, fmt::format("'{}' is not an ISO-8601 timestamp", trim(fields[0])));
        }
        if (!rows.timestamps.empty()) {
            const std::int64_t prev = rows.timestamps.back();
            if (ts == prev) throw ParseError(source, lineno, fmt::format("duplicate timestamp {}", format_timestamp(ts)));
            if (ts < prev) {
                throw ParseError(source, lineno,
                                 fmt::format("timestamp {} is out of order (previous row {})", format_timestamp(ts),
                                             format_timestamp(prev)));
            }
            if (step == 0 && rows.timestamps.size() == 1) step = ts - prev;
            if (ts - prev != step) {
                throw ParseError(source, lineno,
                                 fmt::format("irregular spacing: {} s after the previous row, expected {} s (missing "
                                             "timestamp?)",
                                             ts - prev, step));
            }
        }
        rows.timestamps.push_back(ts);
        for (std::size_t c = 1; c < fields.size(); ++c) {
            rows.columns[c - 1].push_back(parse_number(fields[c], source, lineno, names[c]));
        }
    }
    if (!seen_header) throw ParseError(source, 1, "file is empty");
    if (rows.timestamps.empty()) throw ParseError(source, lineno + 1, "no data rows");
    return rows;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    return in;
}

}  // namespace

std::int64_t parse_timestamp(std::string_view text) {
    if (!text.empty() && text.back() == 'Z') text.remove_suffix(1);
    if (text.size() != 16 && text.size() != 19) throw InputError(fmt::format("bad timestamp '{}'", text));
    if (text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') || text[13] != ':' ||
        (text.size() == 19 && text[16] != ':')) {
        throw InputError(fmt::format("bad timestamp '{}'", text));
    }
    try {
        using namespace std::chrono;
        const int y = parse_fixed(text, 0, 4);
        const int mo = parse_fixed(text, 5, 2);
        const int d = parse_fixed(text, 8, 2);
        const int h = parse_fixed(text, 11, 2);
        const int mi = parse_fixed(text, 14, 2);
        const int s = text.size() == 19 ? parse_fixed(text, 17, 2) : 0;
        const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
        if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw InputError("");
        const auto days = sys_days{ymd}.time_since_epoch().count();
        return std::int64_t{days} * 86400 + h * 3600 + mi * 60 + s;
    } catch (const InputError&) {
        throw InputError(fmt::format("bad timestamp '{}'", text));
    }
}

std::string format_timestamp(std::int64_t seconds) {
    using namespace std::chrono;
    std::int64_t days = seconds / 86400;
    std::int64_t rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}", int(ymd.year()), unsigned(ymd.month()),
                       unsigned(ymd.day()), rem / 3600, rem % 3600 / 60, rem % 60);
}

std::vector<std::int64_t> regular_timestamps(std::int64_t start, std::size_t count, double step_hours) {
    const std::int64_t step = step_seconds(step_hours);
    std::vector<std::int64_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = start + static_cast<std::int64_t>(i) * step;
    return out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

TimedSeries read_series_csv(std::istream& in, std::string_view header, double step_hours, const std::string& source) {
    Rows rows = read_rows(in, header, step_seconds(step_hours), source);
    return {std::move(rows.timestamps), std::move(rows.columns.front())};
}

TimedSeries read_series_csv(const std::filesystem::path& path, std::string_view header, double step_hours) {
    auto in = open_input(path);
    return read_series_csv(in, header, step_hours, path.string());
}

PriceSeries parse_prices_csv(const std::filesystem::path& path, double step_hours) {
    return PriceSeries(read_series_csv(path, kPricesHeader, step_hours).values);
}

LoadProfile parse_load_csv(const std::filesystem::path& path, double step_hours) {
    auto series = read_series_csv(path, kLoadHeader, step_hours);
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        if (series.values[i] < 0.0) {
            throw ParseError(path.string(), i + 2, fmt::format("load {} MW is negative", series.values[i]));
        }
    }
    return LoadProfile(std::move(series.values));
}

TimedDay load_day(const std::filesystem::path& prices, const std::filesystem::path& load, double step_hours) {
    auto p = read_series_csv(prices, kPricesHeader, step_hours);
    auto l = read_series_csv(load, kLoadHeader, step_hours);
    if (p.timestamps != l.timestamps) {
        throw InputError(fmt::format("{} and {} do not cover the same timestamps ({} vs {} rows)", prices.string(),
                                     load.string(), p.timestamps.size(), l.timestamps.size()));
    }
    for (std::size_t i = 0; i < l.values.size(); ++i) {
        if (l.values[i] < 0.0) {
            throw ParseError(load.string(), i + 2, fmt::format("load {} MW is negative", l.values[i]));
        }
    }
    const std::size_t T = p.values.size();
    return {std::move(p.timestamps),
            DayInputs(TimeGrid(T, step_hours), PriceSeries(std::move(p.values)), LoadProfile(std::move(l.values)))};
}

void write_series_csv(std::ostream& out, std::string_view header, const std::vector<std::int64_t>& timestamps,
                      std::span<const double> values) {
    if (timestamps.size() != values.size()) throw InputError("timestamp and value counts differ");
    out << header << '\n';
    for (std::size_t i = 0; i < values.size(); ++i) {
        out << format_timestamp(timestamps[i]) << ',' << format_double(values[i]) << '\n';
    }
}

ScheduleTable make_schedule_table(const std::vector<std::int64_t>& timestamps, const DayInputs& day,
                                  const DispatchSchedule& schedule, const BatteryParams& bat) {
    const std::size_t T = day.steps();
    if (timestamps.size() != T || schedule.size() != T) {
        throw InputError(fmt::format("schedule covers {} steps, day covers {}", schedule.size(), T));
    }
    ScheduleTable table;
    table.timestamps = timestamps;
    table.prices.assign(day.prices().values().begin(), day.prices().values().end());
    table.load.assign(day.load().values().begin(), day.load().values().end());
    table.schedule = schedule;
    auto grid = grid_exchange(schedule, day.load());
    table.p_in = std::move(grid.p_in);
    table.p_out = std::move(grid.p_out);
    const auto traj = soc_trajectory(schedule, bat, day.grid());
    table.soc.assign(traj.soc.begin() + 1, traj.soc.end());
    return table;
}

void write_schedule_csv(std::ostream& out, const ScheduleTable& t) {
    out << kScheduleHeader << '\n';
    for (std::size_t i = 0; i < t.timestamps.size(); ++i) {
        out << fmt::format("{},{},{},{},{},{},{},{}\n", format_timestamp(t.timestamps[i]), t.prices[i], t.load[i],
                           t.schedule.p_ch[i], t.schedule.p_dis[i], t.p_in[i], t.p_out[i], t.soc[i]);
    }
}

ScheduleTable read_schedule_csv(std::istream& in, const std::string& source) {
    Rows rows = read_rows(in, kScheduleHeader, 0, source);
    ScheduleTable t;
    t.timestamps = std::move(rows.timestamps);
    t.prices = std::move(rows.columns[0]);
    t.load = std::move(rows.columns[1]);
    t.schedule.p_ch = std::move(rows.columns[2]);
    t.schedule.p_dis = std::move(rows.columns[3]);
    t.p_in = std::move(rows.columns[4]);
    t.p_out = std::move(rows.columns[5]);
    t.soc = std::move(rows.columns[6]);
    return t;
}

ScheduleTable read_schedule_csv(const std::filesystem::path& path) {
    auto in = open_input(path);
    return read_schedule_csv(in, path.string());
}

}  // namespace fcsd
