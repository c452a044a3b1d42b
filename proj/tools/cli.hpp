// Copyright 2026 The modalprobe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace modalprobe {

// Entry point behind the `modalprobe` binary. `args` excludes the program
// name. Returns the process exit status: 0 on success, 2 on usage errors,
// 1 on any other failure (reported as one "error E_<CODE>: ..." line on err).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modalprobe
