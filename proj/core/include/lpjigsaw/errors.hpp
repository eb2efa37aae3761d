#pragma once

#include <stdexcept>
#include <string>

namespace lpjigsaw {

// Base for every error the library throws on bad input or inconsistent data.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Image dimensions that are not multiples of the piece size, mismatched
// piece sizes, and similar shape problems.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable files, bad manifests, missing bundle members.
class DataError : public Error {
 public:
  using Error::Error;
};

// Contradictory offsets or anchors, or a pool that cannot fill a window.
class InconsistencyError : public Error {
 public:
  using Error::Error;
};

class SizeLimitError : public Error {
 public:
  using Error::Error;
};

}  // namespace lpjigsaw
