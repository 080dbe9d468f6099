#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "countpred/daily_series.hpp"
#include "countpred/errors.hpp"

using namespace countpred;
using namespace std::chrono;

namespace {

const char* kSample =
    "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId,countryterritoryCode,popData2019\n"
    "04/03/2020,4,3,2020,10,3,United_States_of_America,US,USA,329064917\n"
    "02/03/2020,2,3,2020,8,1,United_States_of_America,US,USA,329064917\n"
    "01/03/2020,1,3,2020,7,0,United_States_of_America,US,USA,329064917\n"
    "01/03/2020,1,3,2020,5,2,\"Bonaire, Saint Eustatius and Saba\",BQ,BES,25711\n";

}  // namespace

TEST_SUITE("data_cli") {

TEST_CASE("day numbering") {
    CHECK(daynum_of(year_month_day{2020y, March, 1d}) == 62);
    CHECK(daynum_of(year_month_day{2019y, December, 31d}) == 1);
    CHECK(daynum_of(year_month_day{2020y, May, 15d}) == 137);
    CHECK(daynum_of(year_month_day{2020y, June, 2d}) == 155);
    CHECK(date_of_daynum(154) == year_month_day{2020y, June, 1d});
    CHECK(date_of_daynum(185) == year_month_day{2020y, July, 2d});
    for (int d = -30; d < 800; d += 7) CHECK(daynum_of(date_of_daynum(d)) == d);
    // 2020-03-01 was a Sunday.
    CHECK(weekday_of_daynum(62) == Weekday::Sunday);
    CHECK(weekday_of_daynum(63) == Weekday::Monday);
    CHECK(iso_date(date_of_daynum(137)) == "2020-05-15");
    CHECK(parse_iso_date("2020-04-16") == year_month_day{2020y, April, 16d});
    CHECK_THROWS_AS(parse_iso_date("2020-02-30"), DataError);
    CHECK_THROWS_AS(parse_iso_date("April 16"), DataError);
}

TEST_CASE("parsing fills gaps and filters the country") {
    std::istringstream in(kSample);
    const DailySeries s = parse_ecdc_csv(in, "US");
    REQUIRE(s.records.size() == 4);
    CHECK(s.first_daynum() == 62);
    CHECK(s.last_daynum() == 65);
    CHECK(s.records[0].count == 0);
    CHECK(s.records[1].count == 1);
    CHECK(s.records[2].filled);
    CHECK(s.records[2].count == 0);
    CHECK(s.records[3].count == 3);
    CHECK(s.total() == 4);
    CHECK(s.first_positive_daynum() == 63);
    CHECK(s.at_daynum(65).weekday == Weekday::Wednesday);

    std::istringstream by_name(kSample);
    CHECK(parse_ecdc_csv(by_name, "United_States_of_America").records.size() == 4);
    std::istringstream quoted(kSample);
    const DailySeries bq = parse_ecdc_csv(quoted, "Bonaire, Saint Eustatius and Saba");
    CHECK(bq.total() == 2);
}

TEST_CASE("parse errors") {
    std::istringstream none(kSample);
    CHECK_THROWS_AS(parse_ecdc_csv(none, "FR"), DataError);

    std::istringstream missing("dateRep,day,month,year,cases,countriesAndTerritories\n1/3/2020,1,3,2020,1,US\n");
    CHECK_THROWS_AS(parse_ecdc_csv(missing, "US"), DataError);

    std::istringstream negative(
        "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId\n01/03/2020,1,3,2020,1,-4,X,US\n");
    try {
        (void)parse_ecdc_csv(negative, "US");
        FAIL("expected a data error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::istringstream bad_date(
        "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId\n30/02/2020,30,2,2020,1,4,X,US\n");
    CHECK_THROWS_AS(parse_ecdc_csv(bad_date, "US"), DataError);

    std::istringstream dup(
        "dateRep,day,month,year,cases,deaths,countriesAndTerritories,geoId\n"
        "01/03/2020,1,3,2020,1,4,X,US\n01/03/2020,1,3,2020,1,5,X,US\n");
    CHECK_THROWS_AS(parse_ecdc_csv(dup, "US"), DataError);

    std::istringstream empty("");
    CHECK_THROWS_AS(parse_ecdc_csv(empty, "US"), DataError);
    CHECK_THROWS_AS(parse_ecdc_csv(std::filesystem::path("/nonexistent/file.csv"), "US"), DataError);
}

TEST_CASE("round trip through the ECDC layout") {
    std::istringstream in(kSample);
    const DailySeries s = parse_ecdc_csv(in, "US");
    std::ostringstream out;
    write_ecdc_csv(out, s);
    std::istringstream back(out.str());
    const DailySeries again = parse_ecdc_csv(back, "US");
    CHECK(again == s);

    DailySeries odd = s;
    odd.country = "Name, with comma";
    std::ostringstream out2;
    write_ecdc_csv(out2, odd);
    std::istringstream back2(out2.str());
    CHECK(parse_ecdc_csv(back2, "Name, with comma").records == s.records);
}

TEST_CASE("window and daily table") {
    std::istringstream in(kSample);
    const DailySeries s = parse_ecdc_csv(in, "US");
    const DailySeries w = s.window(63, 64);
    CHECK(w.records.size() == 2);
    CHECK(w.total() == 1);
    std::ostringstream out;
    write_daily_csv(out, s);
    CHECK(out.str().rfind("date,daynum,weekday,count,filled\n2020-03-01,62,", 0) == 0);
    CHECK_THROWS_AS(s.at_daynum(70), DataError);
}

TEST_CASE("adjustment files") {
    const auto dir = std::filesystem::temp_directory_path() / "countpred_adj_test";
    std::filesystem::create_directories(dir);
    const auto path = dir / "adj.json";
    {
        std::ofstream f(path);
        f << R"({"adjustments": [{"date": "2020-06-26", "amount": 1854, "note": "b"},
                                  {"date": "2020-04-16", "amount": 3778, "note": "a"}]})";
    }
    const auto adj = load_adjustments(path);
    REQUIRE(adj.size() == 2);
    CHECK(adj[0].daynum == 108);
    CHECK(adj[0].amount == 3778);
    CHECK(adj[1].daynum == 179);
    {
        std::ofstream f(path);
        f << R"([{"date": "2020-04-16", "amount": -1}])";
    }
    CHECK_THROWS_AS(load_adjustments(path), DataError);
    {
        std::ofstream f(path);
        f << "not json";
    }
    CHECK_THROWS_AS(load_adjustments(path), DataError);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
