#include "acctune/evaluation.hpp"

namespace acctune {

std::string_view to_string(EvalStatus s) {
  switch (s) {
    case EvalStatus::Measured:
      return "measured";
    case EvalStatus::CompileError:
      return "compile_error";
    case EvalStatus::RuntimeError:
      break;
    case EvalStatus::Timeout:
      return "timeout";
  }
  return "runtime_error";
}

std::optional<EvalStatus> eval_status_from_string(std::string_view s) {
  if (s == "measured") return EvalStatus::Measured;
  if (s == "compile_error") return EvalStatus::CompileError;
  if (s == "runtime_error") return EvalStatus::RuntimeError;
  if (s == "timeout") return EvalStatus::Timeout;
  return std::nullopt;
}

}  // namespace acctune
