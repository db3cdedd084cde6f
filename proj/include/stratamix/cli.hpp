#ifndef STRATAMIX_CLI_HPP
#define STRATAMIX_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace stratamix::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kUsageOrParse = 2;
inline constexpr int kZeroLikelihood = 3;

/// Runs the command line `args` (args[0] is the program name). Messages go
/// to `out` and `err`; result files go to the --out directory.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stratamix::cli

#endif  // STRATAMIX_CLI_HPP
