#pragma once

#include <stdexcept>
#include <string>

namespace celp {

// Shape/grid mismatch between operands.
struct DimensionError : std::invalid_argument {
  explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

// Masked reduction over a label that selects no positions.
struct EmptyRegionError : std::runtime_error {
  explicit EmptyRegionError(const std::string& what) : std::runtime_error(what) {}
};

// Uniform draw requested from an empty candidate set.
struct EmptyCandidateError : std::runtime_error {
  explicit EmptyCandidateError(const std::string& what) : std::runtime_error(what) {}
};

// Pseudo-mask center does not lie on annotated background.
struct InvalidCenterError : std::invalid_argument {
  explicit InvalidCenterError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed binary file (tensor file, checkpoint); message carries the byte offset.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid run configuration; message names the offending field.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace celp
