#ifndef MPCFORGE_ERRORS_HPP
#define MPCFORGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mpcforge {

enum class Errc {
  DomainMismatch,
  NotInvertible,
  DuplicatePoint,
  Overflow,
  ParamError,
  SchemeMismatch,
  InsufficientShares,
  InconsistentReplicas,
  InsufficientRandomness,
  TransportFailure,
  Timeout,
  InconsistentBroadcast,
  Abort,
  ConfigError,
  IoError,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::DomainMismatch: return "DomainMismatch";
    case Errc::NotInvertible: return "NotInvertible";
    case Errc::DuplicatePoint: return "DuplicatePoint";
    case Errc::Overflow: return "Overflow";
    case Errc::ParamError: return "ParamError";
    case Errc::SchemeMismatch: return "SchemeMismatch";
    case Errc::InsufficientShares: return "InsufficientShares";
    case Errc::InconsistentReplicas: return "InconsistentReplicas";
    case Errc::InsufficientRandomness: return "InsufficientRandomness";
    case Errc::TransportFailure: return "TransportFailure";
    case Errc::Timeout: return "Timeout";
    case Errc::InconsistentBroadcast: return "InconsistentBroadcast";
    case Errc::Abort: return "Abort";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Error";
}

}  // namespace mpcforge

#endif
