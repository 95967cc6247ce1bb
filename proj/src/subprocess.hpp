#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace socrat::detail {

// Runs `command` under /bin/sh, writes one line per input and reads one reply
// line per input, in lockstep. Calls are serialized process-wide.
// Throws BlackBoxFailure (carrying the failing index) on early exit or timeout.
std::vector<std::string> run_line_protocol(const std::string& command,
                                           const std::vector<std::string>& lines,
                                           std::chrono::milliseconds timeout);

}  // namespace socrat::detail
