#pragma once

// Categorical predictor vocabularies and their integer codes.

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "readmit/csv.hpp"
#include "readmit/error.hpp"

namespace readmit {

enum class Race : int { White = 0, Black = 1, Hispanic = 2, Other = 3 };
enum class FamilyType : int { Single = 0, AdultFamilies = 1, FamiliesWithChildren = 2 };
enum class ReasonHomeless : int { Eviction = 0, Discord = 1, DomesticViolence = 2, Overcrowding = 3, Other = 4 };
enum class Employment : int { Unemployed = 0, Employed = 1, Unknown = 2 };
enum class Citizenship : int { Unknown = 0, Citizen = 1, NonResident = 2, Undocumented = 3 };

enum class CategoricalField { Race, FamilyType, ReasonHomeless, Employment, Citizenship };

inline constexpr std::array<CategoricalField, 5> kCategoricalFields = {
    CategoricalField::Race, CategoricalField::FamilyType, CategoricalField::ReasonHomeless,
    CategoricalField::Employment, CategoricalField::Citizenship};

namespace detail {
inline constexpr std::array<std::string_view, 4> kRaceLabels = {"White", "Black", "Hispanic", "Other"};
inline constexpr std::array<std::string_view, 3> kFamilyLabels = {"Single", "Adult Families", "Families with Children"};
inline constexpr std::array<std::string_view, 5> kReasonLabels = {"Eviction", "Discord", "Domestic Violence",
                                                                  "Overcrowding", "Other"};
inline constexpr std::array<std::string_view, 3> kEmploymentLabels = {"Unemployed", "Employed", "Unknown"};
inline constexpr std::array<std::string_view, 4> kCitizenshipLabels = {"Unknown", "Citizen", "Non-Resident",
                                                                       "Undocumented"};
}  // namespace detail

constexpr std::string_view field_name(CategoricalField field) {
  switch (field) {
    case CategoricalField::Race: return "race";
    case CategoricalField::FamilyType: return "family_type";
    case CategoricalField::ReasonHomeless: return "reason_homeless";
    case CategoricalField::Employment: return "employment";
    case CategoricalField::Citizenship: return "citizenship";
  }
  return "";
}

/// Labels indexed by code.
constexpr std::span<const std::string_view> category_labels(CategoricalField field) {
  switch (field) {
    case CategoricalField::Race: return detail::kRaceLabels;
    case CategoricalField::FamilyType: return detail::kFamilyLabels;
    case CategoricalField::ReasonHomeless: return detail::kReasonLabels;
    case CategoricalField::Employment: return detail::kEmploymentLabels;
    case CategoricalField::Citizenship: return detail::kCitizenshipLabels;
  }
  return {};
}

constexpr int category_count(CategoricalField field) { return static_cast<int>(category_labels(field).size()); }

/// Code that absorbs unrecognised values; family type has none.
constexpr int residual_code(CategoricalField field) {
  switch (field) {
    case CategoricalField::Race: return static_cast<int>(Race::Other);
    case CategoricalField::ReasonHomeless: return static_cast<int>(ReasonHomeless::Other);
    case CategoricalField::Employment: return static_cast<int>(Employment::Unknown);
    case CategoricalField::Citizenship: return static_cast<int>(Citizenship::Unknown);
    case CategoricalField::FamilyType: return -1;
  }
  return -1;
}

inline std::string_view category_label(CategoricalField field, int code) {
  auto labels = category_labels(field);
  if (code < 0 || code >= static_cast<int>(labels.size()))
    throw Error(ErrorCode::InvalidArgument,
                "code " + std::to_string(code) + " out of range for " + std::string(field_name(field)));
  return labels[static_cast<std::size_t>(code)];
}

/// Case-insensitive match of a raw value against the field's labels.
inline int canonicalize(std::string_view raw, CategoricalField field) {
  const std::string needle = csv::lower(csv::trim(raw));
  auto labels = category_labels(field);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (csv::lower(labels[i]) == needle) return static_cast<int>(i);
  if (field == CategoricalField::FamilyType)
    throw Error(ErrorCode::UnmappableFamilyType, "unrecognised family type '" + std::string(raw) + "'");
  return residual_code(field);
}

}  // namespace readmit
