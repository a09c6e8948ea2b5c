#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "lcm/env/env.hpp"

namespace lcm::env {

// Observation for agent `who`: own block, partner block, household block.
// Affine maps are fixed so the same state always encodes the same way.
inline constexpr int kOwnFeatures = kEmploymentStateCount + 30;
inline constexpr int kPartnerFeatures = kEmploymentStateCount + 6;
inline constexpr int kCommonFeatures = 8;
inline constexpr int kFeatureCount = kOwnFeatures + kPartnerFeatures + kCommonFeatures;

void encode_features(const HouseholdState& hh, int who, const Model& m, std::span<float> out);
std::array<float, kFeatureCount> features(const HouseholdState& hh, int who, const Model& m);
std::vector<std::string> feature_names();

}  // namespace lcm::env
