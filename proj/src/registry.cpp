#include "hyjob/registry.hpp"

#include <string>

namespace hyjob {

InjectionMapping DetachedContext::inject(const InjectionRequest&) {
  fail(ErrorCode::InvalidTarget, "job injection requires a running algorithm");
}

std::uint32_t FunctionRegistry::add(UserFunction f) {
  if (frozen()) fail(ErrorCode::RegistryFrozen, "functions must be registered before the run starts");
  auto id = next_id_++;
  functions_.emplace(id, std::move(f));
  return id;
}

FunctionData FunctionRegistry::invoke(std::uint32_t id, const FunctionData& input,
                                      JobContext& ctx) const {
  auto it = functions_.find(id);
  if (it == functions_.end()) fail(ErrorCode::UnknownFunction, "no function with id " + std::to_string(id));
  FunctionData output;
  try {
    it->second(input, output, ctx);
  } catch (const std::exception& e) {
    fail(ErrorCode::UserFunctionPanic, "function " + std::to_string(id) + " raised: " + e.what());
  } catch (...) {
    fail(ErrorCode::UserFunctionPanic, "function " + std::to_string(id) + " raised a non-standard exception");
  }
  return output;
}

FunctionData FunctionRegistry::invoke(std::uint32_t id, const FunctionData& input) const {
  DetachedContext ctx;
  return invoke(id, input, ctx);
}

}  // namespace hyjob
