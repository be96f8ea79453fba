#pragma once

#include <stdexcept>
#include <string>

namespace reddsc {

/// Base class of every error thrown by the toolkit.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

// ---- ingestion / CSV ----

class CsvError : public Error {
public:
    using Error::Error;
};

class MissingColumn : public CsvError {
public:
    MissingColumn(const std::string& column, const std::string& file)
        : CsvError("missing column '" + column + "' in " + file), column(column) {}
    std::string column;
};

class DuplicateSiteId : public Error {
public:
    explicit DuplicateSiteId(const std::string& site_id, const std::string& detail)
        : Error("duplicate site id '" + site_id + "': " + detail), site_id(site_id) {}
    std::string site_id;
};

class NonMonotoneSeries : public Error {
public:
    NonMonotoneSeries(const std::string& site_id, int year)
        : Error("cumulative series for site '" + site_id + "' decreases at year " +
                std::to_string(year)),
          site_id(site_id), year(year) {}
    std::string site_id;
    int year;
};

class SeriesExceedsArea : public Error {
public:
    SeriesExceedsArea(const std::string& site_id, int year, double value, double area)
        : Error("site '" + site_id + "' has " + std::to_string(value) +
                " ha deforested at year " + std::to_string(year) + " on " +
                std::to_string(area) + " ha of area"),
          site_id(site_id), year(year) {}
    std::string site_id;
    int year;
};

class YearGap : public Error {
public:
    YearGap(const std::string& site_id, int missing_year)
        : Error("site '" + site_id + "' is missing year " + std::to_string(missing_year)),
          site_id(site_id), missing_year(missing_year) {}
    std::string site_id;
    int missing_year;
};

class InvalidMeta : public Error {
public:
    using Error::Error;
};

// ---- configuration ----

class InvalidConfig : public Error {
public:
    using Error::Error;
};

// ---- donor pool ----

class EmptyPool : public Error {
public:
    using Error::Error;
};

class ZeroProjectBuffer : public Error {
public:
    explicit ZeroProjectBuffer(const std::string& project_id)
        : Error("project '" + project_id +
                "' has zero pre-start buffer deforestation; relative deviation is "
                "undefined, disable the donor filter for this project"),
          project_id(project_id) {}
    std::string project_id;
};

// ---- solver ----

class SolverDiverged : public Error {
public:
    using Error::Error;
};

class IllConditioned : public Error {
public:
    using Error::Error;
};

class YearOutOfDomain : public Error {
public:
    YearOutOfDomain(const std::string& what_arg, int year) : Error(what_arg), year(year) {}
    int year;
};

// ---- validation windows ----

class WindowOutOfRange : public Error {
public:
    using Error::Error;
};

class EmptyWindow : public Error {
public:
    using Error::Error;
};

// ---- inference ----

class NoPostYears : public Error {
public:
    using Error::Error;
};

class TooFewDonors : public Error {
public:
    using Error::Error;
};

// ---- bias / credits ----

class InvalidBiasModel : public Error {
public:
    using Error::Error;
};

class DeforestationExceedsArea : public Error {
public:
    using Error::Error;
};

class ZeroBaseline : public Error {
public:
    using Error::Error;
};

class ZeroDenominator : public Error {
public:
    using Error::Error;
};

// ---- simulation ----

class InfeasibleEffect : public Error {
public:
    using Error::Error;
};

}  // namespace reddsc
