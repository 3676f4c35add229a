#pragma once

#include <cstdint>
#include <string>

#include "hierflow/dataset.hpp"
#include "hierflow/query.hpp"

namespace hierflow::fixtures {

// Small ICD/CPT-flavoured hierarchy: diagnoses (pain, substance use, heart
// failure, diabetes and others), encounters and procedures.
TypeHierarchy demo_hierarchy();

// Heart-failure cohort: 16,983 diabetic entities of whom 5,084 carry
// 26,153 events in the 17-node I50 subtree, 10,739 of them coded I50 itself
// and the rest spread over 13 more specific codes.
inline constexpr std::size_t kHeartFailureEntities = 16983;
inline constexpr std::size_t kHeartFailureCarriers = 5084;
inline constexpr std::size_t kHeartFailureEvents = 26153;
inline constexpr std::size_t kHeartFailureGeneric = 10739;
DatasetHandle heart_failure_dataset(std::uint64_t seed = 17);
// Every entity, anchored at its first event, outcome = chronic kidney disease.
QuerySpec heart_failure_query();

// Pain-to-discharge cohort: 1,732 of 2,500 entities match the query below,
// 121 of them develop an opioid disorder after discharge. Between pain and
// discharge 360 members have a substance-use event (all of them nicotine)
// and 148 a heart procedure (138 of them an ECG); 240 members have a
// substance-use event in the year before pain.
inline constexpr std::size_t kUseCaseEntities = 2500;
inline constexpr std::size_t kUseCaseMembers = 1732;
inline constexpr std::size_t kUseCasePositives = 121;
inline constexpr std::size_t kUseCaseSubstanceInWindow = 360;
inline constexpr std::size_t kUseCaseSubstanceLookback = 240;
inline constexpr std::size_t kUseCaseHeartProcedures = 148;
inline constexpr std::size_t kUseCaseEcg = 138;
DatasetHandle use_case_dataset(std::uint64_t seed = 51);
// inclusion [G89, ENC.DIS], lookback 365 days, outcome [F11].
QuerySpec use_case_query();

inline constexpr const char* kSubstanceGroup = "F10-F19";
inline constexpr const char* kNicotine = "F17";
inline constexpr const char* kHeartProcedures = "PX.CARD";
inline constexpr const char* kEcg = "PX.CARD.ECG";

}  // namespace hierflow::fixtures
