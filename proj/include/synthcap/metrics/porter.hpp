// Copyright 2026 The synthcap Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>

namespace synthcap::metrics {

// Porter (1980) suffix stripping. Expects lowercase ASCII; words of length
// <= 2 and words containing non-letters other than the apostrophe are
// returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace synthcap::metrics
