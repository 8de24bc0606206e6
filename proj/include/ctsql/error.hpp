#pragma once

#include <stdexcept>
#include <string>

namespace ctsql {

// Error categories surfaced through the C API as status codes.
enum class errc {
  parse,       // malformed input file or record
  reference,   // dangling id (instance -> db, etc.)
  config,      // bad split/strategy configuration
  argument,    // bad argument to an in-process operation
  contract,    // precondition violated by a caller
  lex,         // SQL text does not lex
  integrity,   // corrupted checkpoint or artifact
  not_trained, // prediction requested from an empty model
  internal,
};

class Error : public std::runtime_error {
public:
  Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  errc code() const { return code_; }

private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw Error(code, what); }

} // namespace ctsql
