#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "countpred/poisson_glm.hpp"

namespace countpred {

// Day index with 2019-12-31 = 1.
int daynum_of(std::chrono::year_month_day date);
std::chrono::year_month_day date_of_daynum(int daynum);
Weekday weekday_of_daynum(int daynum);
std::string iso_date(std::chrono::year_month_day date);
std::chrono::year_month_day parse_iso_date(const std::string& text);

struct DailyRecord {
    std::chrono::year_month_day date;
    int daynum = 0;
    Weekday weekday = Weekday::Monday;
    std::int64_t count = 0;
    bool filled = false;  // inserted to close a calendar gap

    bool operator==(const DailyRecord&) const = default;
};

struct Adjustment {
    int daynum = 0;
    std::int64_t amount = 0;
    std::string note;

    bool operator==(const Adjustment&) const = default;
};

struct DailySeries {
    std::vector<DailyRecord> records;
    std::string country;
    std::vector<Adjustment> adjustments;

    bool operator==(const DailySeries&) const = default;

    bool empty() const { return records.empty(); }
    int first_daynum() const { return records.front().daynum; }
    int last_daynum() const { return records.back().daynum; }
    const DailyRecord& at_daynum(int daynum) const;
    // Records with first <= daynum <= last.
    DailySeries window(int first, int last) const;
    std::int64_t total() const;
    // First day with a positive count.
    int first_positive_daynum() const;
};

DailySeries parse_ecdc_csv(std::istream& in, const std::string& country);
DailySeries parse_ecdc_csv(const std::filesystem::path& path, const std::string& country);
// Writes the ECDC column layout; gap-filled records are omitted so that
// parsing the output reproduces the series.
void write_ecdc_csv(std::ostream& out, const DailySeries& series);

// Plain daily table: date,daynum,weekday,count,filled.
void write_daily_csv(std::ostream& out, const DailySeries& series);

// JSON list of {"date": "YYYY-MM-DD", "amount": n, "note": "..."}, either at
// top level or under an "adjustments" key.
std::vector<Adjustment> load_adjustments(const std::filesystem::path& path);

}  // namespace countpred
