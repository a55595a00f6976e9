#pragma once

#include <stdexcept>
#include <string>

namespace satmc {

/// All library failures carry a kind prefix ("format error", "shape error", ...)
/// followed by a human-readable detail, e.g. "format error: self-loop at line 3".
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& kind, const std::string& detail) {
  throw Error(kind + ": " + detail);
}

}  // namespace satmc
