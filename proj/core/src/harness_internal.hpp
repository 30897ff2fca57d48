#pragma once

#include <cstdint>

#include <nlohmann/json.hpp>

#include "noloco/harness.hpp"

namespace noloco::detail {

// Purpose tags for deriving independent streams from the experiment seed.
// Keyed by role, never by consumption order, so every method sees identical
// data and worker streams under a shared seed.
inline constexpr std::uint64_t kTagProblem = 0x9b01;
inline constexpr std::uint64_t kTagInit = 0x9b02;
inline constexpr std::uint64_t kTagData = 0x9b03;
inline constexpr std::uint64_t kTagWorker = 0x9b04;
inline constexpr std::uint64_t kTagRouting = 0x9b05;
inline constexpr std::uint64_t kTagGroups = 0x9b06;
inline constexpr std::uint64_t kTagTime = 0x9b07;

ExperimentConfig experiment_config_from_json(const nlohmann::json& root);

std::string format_double(double value);

}  // namespace noloco::detail
