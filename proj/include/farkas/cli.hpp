#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace farkas::cli {

// Stable process exit codes.
enum ExitCode : int {
    kHolds = 0,     // query holds / certificate accepted
    kViolated = 1,  // query violated / certificate rejected
    kUnknown = 2,   // solver gave no verdict, or an artifact failed re-validation
    kTimeout = 3,   // witness search hit the time limit; best incumbent written
    kUsage = 64,    // usage, parse or unsupported-query errors
};

// Runs one command line (args exclude the program name). Diagnostics and timings go to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int main(int argc, char** argv);

}  // namespace farkas::cli
