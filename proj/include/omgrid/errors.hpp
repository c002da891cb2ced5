// Error categories and the exception type used across the library.
// The CLI maps categories to exit codes; tests match on the category.
#pragma once

#include <stdexcept>
#include <string>

namespace omgrid {

enum class errc {
  structural,          // bad topology: invalid ids, self-loops, nonpositive line data
  model,               // invalid device model (storage assumptions, cost convexity)
  parameter,           // algorithmic parameter outside its admissible range
  contract,            // caller violated an operation precondition
  infeasible,          // LP has no feasible point
  unbounded,           // LP objective unbounded below
  nonconvergence,      // iterative solver hit its iteration cap
  synchronization,     // message-passing protocol violated (missing/duplicate message)
  parse,               // malformed config or CSV input
  schema,              // well-formed file with inconsistent content
  size_guard,          // problem exceeds a documented size limit
  feasibility_breach,  // storage bound violated along a controlled trajectory
  internal,            // library invariant broken (a bug)
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::structural: return "structural";
    case errc::model: return "model";
    case errc::parameter: return "parameter";
    case errc::contract: return "contract";
    case errc::infeasible: return "infeasible";
    case errc::unbounded: return "unbounded";
    case errc::nonconvergence: return "nonconvergence";
    case errc::synchronization: return "synchronization";
    case errc::parse: return "parse";
    case errc::schema: return "schema";
    case errc::size_guard: return "size_guard";
    case errc::feasibility_breach: return "feasibility_breach";
    case errc::internal: return "internal";
  }
  return "unknown";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what),
        code_(code),
        detail_(what) {}
  errc code() const { return code_; }
  // the message without the category prefix, for rethrowing with context
  const std::string& detail() const { return detail_; }

 private:
  errc code_;
  std::string detail_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

}  // namespace omgrid
