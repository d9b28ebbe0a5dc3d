#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmdsvr/eval.hpp"

namespace mmdsvr::cli {

enum ExitCode : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

/// Bad flags or parameter values; maps to exit code 2.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Runs one command: gen, train, predict, cv or bench.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// Replaces every `--config <file>` (or `--config=<file>`) by the file's
/// key=value lines turned into `--key value` pairs, placed right after the
/// subcommand so flags given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

/// Comma-separated reals, e.g. "0.5,0.6,1".
std::vector<double> parse_list(const std::string& text);

struct BenchEntry {
    std::string dataset;
    std::size_t size = 0;
    CVResult svr;
    CVResult mmd;
    /// mmd minus svr over folds where both scores are defined; unset when
    /// fewer than two such pairs exist.
    std::optional<TTestResult> test;
};

struct BenchReport {
    std::vector<BenchEntry> entries;
    double level = 0.95;
    int wins = 0;
    int ties = 0;
    int losses = 0;
};

/// Pairs the fold scores of the two results and fills `test`.
void compare(BenchEntry& entry, double level);
/// Recounts wins, ties and losses of MMD-SVR from the entries.
void tally(BenchReport& report);
std::string format_report(const BenchReport& report);

}  // namespace mmdsvr::cli
