// SPDX-License-Identifier: Apache-2.0

#ifndef NRWE_FORMAT_HPP
#define NRWE_FORMAT_HPP

#include <cstdio>
#include <string>

namespace nrwe {

/// Fixed 17-significant-digit formatting; round-trips doubles exactly and
/// keeps emitted files byte-stable across runs.
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace nrwe

#endif  // NRWE_FORMAT_HPP
