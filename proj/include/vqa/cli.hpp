// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vqa {

/// Runs one command line (args[0] is the program name). Returns the exit
/// code: 0 on success, 2 on usage errors, 1 on any other failure, with a
/// single "error: <kind>: <message>" line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vqa
