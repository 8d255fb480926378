// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace synthcap::cli {

// Runs one subcommand. `args` excludes the program name. Returns the process
// exit code (0 ok, 2 usage, 3 I/O, 4 protocol, 5 training failure); failures
// print one "error[<class>]: <message>" line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace synthcap::cli
