#include "countpred/daily_series.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "countpred/errors.hpp"

namespace countpred {

namespace {

using std::chrono::sys_days;
using std::chrono::year_month_day;

constexpr year_month_day kOrigin{std::chrono::year{2019}, std::chrono::month{12}, std::chrono::day{31}};

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    if (quoted) throw DataError("line " + std::to_string(line_no) + ": unterminated quoted field");
    fields.push_back(std::move(field));
    return fields;
}

std::string csv_quote(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

long parse_integer(const std::string& text, std::size_t line_no, const char* column) {
    long value = 0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    while (begin < end && *begin == ' ') ++begin;
    while (end > begin && end[-1] == ' ') --end;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || begin == end)
        throw DataError("line " + std::to_string(line_no) + ": column " + column + " is not an integer: '" +
                        text + "'");
    return value;
}

DailyRecord make_record(year_month_day date, std::int64_t count, bool filled) {
    DailyRecord rec;
    rec.date = date;
    rec.daynum = daynum_of(date);
    rec.weekday = weekday_of_daynum(rec.daynum);
    rec.count = count;
    rec.filled = filled;
    return rec;
}

}  // namespace

int daynum_of(year_month_day date) {
    if (!date.ok()) throw DataError("invalid calendar date");
    return static_cast<int>((sys_days{date} - sys_days{kOrigin}).count()) + 1;
}

year_month_day date_of_daynum(int daynum) {
    return year_month_day{sys_days{kOrigin} + std::chrono::days{daynum - 1}};
}

Weekday weekday_of_daynum(int daynum) {
    const std::chrono::weekday wd{sys_days{date_of_daynum(daynum)}};
    return static_cast<Weekday>(wd.iso_encoding() - 1);
}

std::string iso_date(year_month_day date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

year_month_day parse_iso_date(const std::string& text) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    char dash1 = 0;
    char dash2 = 0;
    std::istringstream in(text);
    in >> y >> dash1 >> m >> dash2 >> d;
    const year_month_day date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!in || dash1 != '-' || dash2 != '-' || !date.ok()) throw DataError("unparseable date '" + text + "'");
    return date;
}

const DailyRecord& DailySeries::at_daynum(int daynum) const {
    if (records.empty() || daynum < first_daynum() || daynum > last_daynum())
        throw DataError("day " + std::to_string(daynum) + " is outside the series");
    return records[static_cast<std::size_t>(daynum - first_daynum())];
}

DailySeries DailySeries::window(int first, int last) const {
    DailySeries out;
    out.country = country;
    for (const auto& adj : adjustments)
        if (adj.daynum >= first && adj.daynum <= last) out.adjustments.push_back(adj);
    for (const auto& rec : records)
        if (rec.daynum >= first && rec.daynum <= last) out.records.push_back(rec);
    return out;
}

std::int64_t DailySeries::total() const {
    std::int64_t sum = 0;
    for (const auto& rec : records) sum += rec.count;
    return sum;
}

int DailySeries::first_positive_daynum() const {
    for (const auto& rec : records)
        if (rec.count > 0) return rec.daynum;
    throw DataError("series has no positive counts");
}

DailySeries parse_ecdc_csv(std::istream& in, const std::string& country) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) throw DataError("empty input: missing header");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    const auto header = split_csv_line(line, line_no);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* required : {"dateRep", "day", "month", "year", "deaths", "countriesAndTerritories"}) {
        if (!col.count(required)) throw DataError(std::string("missing required column '") + required + "'");
    }
    std::vector<std::size_t> match_cols{col.at("countriesAndTerritories")};
    for (const char* alt : {"geoId", "countryterritoryCode"})
        if (col.count(alt)) match_cols.push_back(col.at(alt));

    std::map<int, DailyRecord> by_day;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv_line(line, line_no);
        if (fields.size() < header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        const bool match = std::any_of(match_cols.begin(), match_cols.end(),
                                       [&](std::size_t c) { return fields[c] == country; });
        if (!match) continue;
        const long d = parse_integer(fields[col.at("day")], line_no, "day");
        const long m = parse_integer(fields[col.at("month")], line_no, "month");
        const long y = parse_integer(fields[col.at("year")], line_no, "year");
        const year_month_day date{std::chrono::year{static_cast<int>(y)}, std::chrono::month{static_cast<unsigned>(m)},
                                  std::chrono::day{static_cast<unsigned>(d)}};
        if (!date.ok())
            throw DataError("line " + std::to_string(line_no) + ": invalid date " + std::to_string(y) + "-" +
                            std::to_string(m) + "-" + std::to_string(d));
        const long deaths = parse_integer(fields[col.at("deaths")], line_no, "deaths");
        if (deaths < 0) throw DataError("line " + std::to_string(line_no) + ": negative count " + std::to_string(deaths));
        const DailyRecord rec = make_record(date, deaths, false);
        if (!by_day.emplace(rec.daynum, rec).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate date " + iso_date(date));
    }
    if (by_day.empty()) throw DataError("no rows for country '" + country + "'");

    DailySeries series;
    series.country = country;
    int expected = by_day.begin()->first;
    for (const auto& [daynum, rec] : by_day) {
        for (; expected < daynum; ++expected) series.records.push_back(make_record(date_of_daynum(expected), 0, true));
        series.records.push_back(rec);
        expected = daynum + 1;
    }
    return series;
}

DailySeries parse_ecdc_csv(const std::filesystem::path& path, const std::string& country) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open data file '" + path.string() + "'");
    return parse_ecdc_csv(in, country);
}

void write_ecdc_csv(std::ostream& out, const DailySeries& series) {
    out << "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId\n";
    const std::string tag = csv_quote(series.country);
    for (auto it = series.records.rbegin(); it != series.records.rend(); ++it) {
        if (it->filled) continue;
        const unsigned d = static_cast<unsigned>(it->date.day());
        const unsigned m = static_cast<unsigned>(it->date.month());
        const int y = static_cast<int>(it->date.year());
        char rep[16];
        std::snprintf(rep, sizeof rep, "%02u/%02u/%04d", d, m, y);
        out << rep << ',' << d << ',' << m << ',' << y << ",," << it->count << ',' << tag << ',' << tag << '\n';
    }
}

void write_daily_csv(std::ostream& out, const DailySeries& series) {
    out << "date,daynum,weekday,count,filled\n";
    for (const auto& rec : series.records) {
        out << iso_date(rec.date) << ',' << rec.daynum << ',' << to_string(rec.weekday) << ',' << rec.count << ','
            << (rec.filled ? 1 : 0) << '\n';
    }
}

std::vector<Adjustment> load_adjustments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open adjustments file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("adjustments file is not valid JSON: " + std::string(e.what()));
    }
    const nlohmann::json& list = doc.is_object() ? doc.at("adjustments") : doc;
    if (!list.is_array()) throw DataError("adjustments must be a JSON array");
    std::vector<Adjustment> result;
    for (const auto& item : list) {
        try {
            Adjustment adj;
            adj.daynum = daynum_of(parse_iso_date(item.at("date").get<std::string>()));
            adj.amount = item.at("amount").get<std::int64_t>();
            adj.note = item.value("note", "");
            if (adj.amount < 0) throw DataError("adjustment amount must be nonnegative");
            result.push_back(std::move(adj));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("malformed adjustment entry: " + std::string(e.what()));
        }
    }
    std::sort(result.begin(), result.end(), [](const Adjustment& a, const Adjustment& b) { return a.daynum < b.daynum; });
    return result;
}

}  // namespace countpred
