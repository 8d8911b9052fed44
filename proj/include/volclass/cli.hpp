#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace volclass::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kDataError = 2,
    kInternal = 3,
};

/// Entry point of the `volclass` tool. Subcommands: histogram, train,
/// classify, classes, eval, synth.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
/// Same, with args[0] as the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace volclass::cli
