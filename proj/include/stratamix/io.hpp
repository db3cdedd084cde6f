#ifndef STRATAMIX_IO_HPP
#define STRATAMIX_IO_HPP

// CSV readers and writers. Observation files have header `x,k`; long-format
// unit files have header `stratum,a,value` with an optional side file
// `stratum,a` declaring strata that have no observed units.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "stratamix/mixture.hpp"
#include "stratamix/threshold.hpp"

namespace stratamix {

/// Throws ParseError (with the 1-based line) on malformed rows or x > k.
std::vector<Observation> read_observations(std::istream& in);
void write_observations(std::ostream& os, std::span<const Observation> obs);

struct LongData {
    std::vector<std::string> ids;
    std::vector<GeneralStratum> strata;
};

/// Strata appear in side-file order, then in order of first appearance in
/// the unit file. A stratum's weight must agree across rows and files.
LongData read_long(std::istream& units, std::istream* strataFile = nullptr);
void write_long(std::ostream& os, const LongData& data);
void write_strata(std::ostream& os, const LongData& data);

}  // namespace stratamix

#endif  // STRATAMIX_IO_HPP
