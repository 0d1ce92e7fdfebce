#pragma once

#include <stdexcept>
#include <string>

namespace pack {

// Base for every error raised by the engine.  Callers that only care about
// "something went wrong" catch this; the subclasses exist so tests and the
// CLI can tell failure modes apart.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte offset " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class DegenerateMeshError : public Error { public: using Error::Error; };
class DegenerateGeometryError : public Error { public: using Error::Error; };
class WatertightError : public Error { public: using Error::Error; };
class OutOfBoundsError : public Error { public: using Error::Error; };
class ResolutionError : public Error { public: using Error::Error; };
class EmptyDataError : public Error { public: using Error::Error; };
class UndefinedMetricError : public Error { public: using Error::Error; };
class NoFeasiblePlacementError : public Error { public: using Error::Error; };
class ProtocolError : public Error { public: using Error::Error; };
class ManifestError : public Error { public: using Error::Error; };
class InternalError : public Error { public: using Error::Error; };

}  // namespace pack
