#pragma once

#include "disagg/estimator.hpp"
#include "disagg/gegenbauer.hpp"
#include "disagg/harness.hpp"
#include "disagg/io/csv.hpp"
#include "disagg/ma_repr.hpp"
#include "disagg/mixture.hpp"
#include "disagg/simulate.hpp"
