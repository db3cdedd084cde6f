#include "stratamix/io.hpp"

#include <charconv>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>

#include "stratamix/errors.hpp"

namespace stratamix {

namespace {

std::vector<std::string> split_row(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        std::string cell = line.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        const auto b = cell.find_first_not_of(" \t");
        const auto e = cell.find_last_not_of(" \t");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return cells;
}

bool blank(const std::string& line) { return line.find_first_not_of(" \t\r") == std::string::npos; }

int parse_int(const std::string& s, const char* field, std::size_t line) {
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError(std::string("field '") + field + "' is not an integer: '" + s + "'", line);
    return v;
}

double parse_real(const std::string& s, const char* field, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw ParseError(std::string("field '") + field + "' is not a number: '" + s + "'", line);
}

void expect_header(std::istream& in, const std::vector<std::string>& want, std::size_t& line) {
    std::string text;
    while (std::getline(in, text)) {
        ++line;
        if (blank(text)) continue;
        if (split_row(text) != want) {
            std::string joined;
            for (const auto& w : want) joined += (joined.empty() ? "" : ",") + w;
            throw ParseError("expected header '" + joined + "'", line);
        }
        return;
    }
    throw ParseError("file is empty (missing header)", line);
}

}  // namespace

std::vector<Observation> read_observations(std::istream& in) {
    std::size_t line = 0;
    expect_header(in, {"x", "k"}, line);
    std::vector<Observation> out;
    std::string text;
    while (std::getline(in, text)) {
        ++line;
        if (blank(text)) continue;
        const auto cells = split_row(text);
        if (cells.size() != 2) throw ParseError("expected 2 fields (x,k)", line);
        const Observation y{parse_int(cells[0], "x", line), parse_int(cells[1], "k", line)};
        if (y.k < 0 || y.x < 0 || y.x > y.k)
            throw ParseError("invalid row x=" + cells[0] + ", k=" + cells[1] + " (need 0 <= x <= k)", line);
        out.push_back(y);
    }
    if (out.empty()) throw ParseError("no observation rows", line);
    return out;
}

void write_observations(std::ostream& os, std::span<const Observation> obs) {
    os << "x,k\n";
    for (const auto& y : obs) os << y.x << ',' << y.k << '\n';
}

LongData read_long(std::istream& units, std::istream* strataFile) {
    LongData d;
    std::map<std::string, std::size_t> index;
    auto declare = [&](const std::string& id, double a, std::size_t line) {
        if (id.empty()) throw ParseError("empty stratum id", line);
        if (!(a >= 0.0)) throw ParseError("stratum weight a must be >= 0", line);
        auto it = index.find(id);
        if (it == index.end()) {
            index.emplace(id, d.ids.size());
            d.ids.push_back(id);
            d.strata.push_back({a, {}});
            return d.ids.size() - 1;
        }
        if (d.strata[it->second].a != a)
            throw ParseError("stratum '" + id + "' has conflicting weights", line);
        return it->second;
    };

    std::string text;
    if (strataFile) {
        std::size_t line = 0;
        expect_header(*strataFile, {"stratum", "a"}, line);
        while (std::getline(*strataFile, text)) {
            ++line;
            if (blank(text)) continue;
            const auto cells = split_row(text);
            if (cells.size() != 2) throw ParseError("strata file: expected 2 fields (stratum,a)", line);
            declare(cells[0], parse_real(cells[1], "a", line), line);
        }
    }
    std::size_t line = 0;
    expect_header(units, {"stratum", "a", "value"}, line);
    while (std::getline(units, text)) {
        ++line;
        if (blank(text)) continue;
        const auto cells = split_row(text);
        if (cells.size() != 3) throw ParseError("expected 3 fields (stratum,a,value)", line);
        const auto s = declare(cells[0], parse_real(cells[1], "a", line), line);
        const double v = parse_real(cells[2], "value", line);
        if (!(v >= 0.0)) throw ParseError("values must be >= 0", line);
        d.strata[s].values.push_back(v);
    }
    if (d.strata.empty()) throw ParseError("no strata", line);
    return d;
}

void write_long(std::ostream& os, const LongData& data) {
    os << "stratum,a,value\n" << std::setprecision(12);
    for (std::size_t i = 0; i < data.strata.size(); ++i)
        for (double v : data.strata[i].values) os << data.ids[i] << ',' << data.strata[i].a << ',' << v << '\n';
}

void write_strata(std::ostream& os, const LongData& data) {
    os << "stratum,a\n" << std::setprecision(12);
    for (std::size_t i = 0; i < data.strata.size(); ++i) os << data.ids[i] << ',' << data.strata[i].a << '\n';
}

}  // namespace stratamix
