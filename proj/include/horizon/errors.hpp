#pragma once

#include <stdexcept>
#include <string>

namespace horizon {

/// Failure categories reported by every module.
enum class ErrorKind {
  invalid_argument,
  unknown_system,
  domain_escape,
  non_convergence,
  chart_radius_exceeded,
  singular_fiber,
  not_bracket_generating,
  inadmissible,
  unsupported,
};

/// CLI exit code for a failure: 2 config, 3 domain escape, 4 solver
/// non-convergence, 5 admissibility rejection.
inline int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain_escape: return 3;
    case ErrorKind::non_convergence:
    case ErrorKind::chart_radius_exceeded:
    case ErrorKind::singular_fiber:
    case ErrorKind::not_bracket_generating: return 4;
    case ErrorKind::inadmissible: return 5;
    default: return 2;
  }
}

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return exit_code_for(kind_); }

private:
  ErrorKind kind_;
};

struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::invalid_argument, w) {}
};

struct UnknownSystem : Error {
  explicit UnknownSystem(const std::string& name)
      : Error(ErrorKind::unknown_system, "unknown system: " + name) {}
};

/// The trajectory left the open domain of the endpoint map (state blew up).
struct DomainEscape : Error {
  explicit DomainEscape(const std::string& w) : Error(ErrorKind::domain_escape, "domain escape: " + w) {}
};

struct NonConvergence : Error {
  explicit NonConvergence(const std::string& w) : Error(ErrorKind::non_convergence, w) {}
};

struct ChartRadiusExceeded : Error {
  explicit ChartRadiusExceeded(const std::string& w)
      : Error(ErrorKind::chart_radius_exceeded, w + " (target outside chart radius; subdivide the path)") {}
};

struct SingularFiber : Error {
  explicit SingularFiber(const std::string& w) : Error(ErrorKind::singular_fiber, "singular fiber: " + w) {}
};

struct NotBracketGenerating : Error {
  NotBracketGenerating(int achieved_rank, int n)
      : Error(ErrorKind::not_bracket_generating,
              "not bracket-generating: achieved rank " + std::to_string(achieved_rank) + " of " +
                  std::to_string(n)),
        rank(achieved_rank) {}
  int rank;
};

struct Inadmissible : Error {
  explicit Inadmissible(const std::string& w) : Error(ErrorKind::inadmissible, "inadmissible exponent: " + w) {}
};

struct Unsupported : Error {
  explicit Unsupported(const std::string& w) : Error(ErrorKind::unsupported, "unsupported: " + w) {}
};

}  // namespace horizon
