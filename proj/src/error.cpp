#include "teachbot/error.hpp"

namespace teachbot {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::RankDeficient: return "rank-deficiency";
    case ErrorKind::GenerationExhausted: return "generation-exhausted";
    case ErrorKind::ProtocolOrder: return "protocol-order";
    case ErrorKind::UnknownSkill: return "unknown-skill";
    case ErrorKind::UnsupportedVersion: return "unsupported-version";
    case ErrorKind::Parse: return "parse-error";
    case ErrorKind::Io: return "io-error";
  }
  return "unknown";
}

}  // namespace teachbot
