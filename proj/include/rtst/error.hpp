#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace rtst {

enum class ErrorCode {
  invalid_argument = 1,
  parse,
  io,
  not_found,
  duplicate,
  conflict,
  infeasible,
  capacity,
  internal,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure in the library surfaces as an Error. `flow_id` names the
// offending or conflicting flow when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::uint64_t> flow_id = std::nullopt)
      : std::runtime_error(message), code_(code), flow_id_(flow_id) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::uint64_t> flow_id() const noexcept { return flow_id_; }

 private:
  ErrorCode code_;
  std::optional<std::uint64_t> flow_id_;
};

}  // namespace rtst
