#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace teachbot {

enum class ErrorKind {
  InvalidInput,
  RankDeficient,
  GenerationExhausted,
  ProtocolOrder,
  UnknownSkill,
  UnsupportedVersion,
  Parse,
  Io,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct InvalidInput : Error {
  explicit InvalidInput(const std::string& what) : Error(ErrorKind::InvalidInput, what) {}
};

struct RankDeficient : Error {
  explicit RankDeficient(const std::string& what) : Error(ErrorKind::RankDeficient, what) {}
};

struct GenerationExhausted : Error {
  explicit GenerationExhausted(const std::string& what)
      : Error(ErrorKind::GenerationExhausted, what) {}
};

struct ProtocolOrderError : Error {
  explicit ProtocolOrderError(const std::string& what) : Error(ErrorKind::ProtocolOrder, what) {}
};

struct UnknownSkill : Error {
  explicit UnknownSkill(const std::string& id) : Error(ErrorKind::UnknownSkill, "unknown skill id '" + id + "'") {}
};

struct UnsupportedVersion : Error {
  explicit UnsupportedVersion(int version)
      : Error(ErrorKind::UnsupportedVersion, "unsupported format_version " + std::to_string(version)),
        version_(version) {}
  int version() const noexcept { return version_; }

 private:
  int version_;
};

/// Malformed input document; `byte_offset` points at the failure position.
struct ParseError : Error {
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(ErrorKind::Parse, what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

}  // namespace teachbot
