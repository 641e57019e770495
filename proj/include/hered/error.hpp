// Error taxonomy shared by every module; the C API maps these onto status codes.
#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

namespace hered {

enum class Errc {
  invalid_argument = 1,
  singular_at_origin,
  out_of_domain,
  not_psd,
  convergence_not_certified,
  unbounded_shift,
  tail_uncertifiable,
  model_invalid,
  not_converged,
  generation_failed,
  unsupported_regime,
  syntax_error,
  semantic_error,
  io_error,
  precondition_failed,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what, nlohmann::json witness = nullptr)
      : std::runtime_error(what), code_(code), witness_(std::move(witness)) {}

  Errc code() const noexcept { return code_; }
  const nlohmann::json& witness() const noexcept { return witness_; }

 private:
  Errc code_;
  nlohmann::json witness_;
};

}  // namespace hered
