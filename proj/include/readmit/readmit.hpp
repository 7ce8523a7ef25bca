#pragma once

#include "readmit/categories.hpp"
#include "readmit/cohort.hpp"
#include "readmit/csv.hpp"
#include "readmit/date.hpp"
#include "readmit/error.hpp"
#include "readmit/eval.hpp"
#include "readmit/features.hpp"
#include "readmit/models.hpp"
#include "readmit/resample.hpp"
#include "readmit/rng.hpp"
#include "readmit/synthgen.hpp"

namespace readmit {
inline constexpr const char* kVersion = "0.1.0";
}
