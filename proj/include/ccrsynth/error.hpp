#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ccrsynth {

enum class Errc {
  SyntaxError,
  SortError,
  UnknownLabel,
  DuplicateName,
  UnknownSymbol,
  PartialApplication,
  DeadlockDetected,
  NonTotalModel,
  UninitializedInAllInitMode,
  NoSuccessor,
  ResourceLimit,
  EmptyTableau,
  SkeletonMismatch,
  ProjectionUnsound,
  SimDeadlock,
  Unsupported,
  Io,
  Internal,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::SortError: return "SortError";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::DuplicateName: return "DuplicateName";
    case Errc::UnknownSymbol: return "UnknownSymbol";
    case Errc::PartialApplication: return "PartialApplication";
    case Errc::DeadlockDetected: return "DeadlockDetected";
    case Errc::NonTotalModel: return "NonTotalModel";
    case Errc::UninitializedInAllInitMode: return "UninitializedInAllInitMode";
    case Errc::NoSuccessor: return "NoSuccessor";
    case Errc::ResourceLimit: return "ResourceLimit";
    case Errc::EmptyTableau: return "EmptyTableau";
    case Errc::SkeletonMismatch: return "SkeletonMismatch";
    case Errc::ProjectionUnsound: return "ProjectionUnsound";
    case Errc::SimDeadlock: return "SimDeadlock";
    case Errc::Unsupported: return "Unsupported";
    case Errc::Io: return "Io";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

struct SourceLoc {
  int line = 0;
  int column = 0;
};

// Every failure in the library is reported through this one exception type;
// callers dispatch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(format(code, what, std::nullopt)), code_(code), detail_(what) {}
  Error(Errc code, const std::string& what, SourceLoc loc)
      : std::runtime_error(format(code, what, loc)), code_(code), detail_(what), loc_(loc) {}

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const std::optional<SourceLoc>& location() const noexcept { return loc_; }

 private:
  static std::string format(Errc code, const std::string& what, std::optional<SourceLoc> loc) {
    std::string s(errc_name(code));
    if (loc) s += " at " + std::to_string(loc->line) + ":" + std::to_string(loc->column);
    s += ": ";
    s += what;
    return s;
  }

  Errc code_;
  std::string detail_;
  std::optional<SourceLoc> loc_;
};

}  // namespace ccrsynth
