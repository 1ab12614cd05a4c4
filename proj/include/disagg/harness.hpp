#pragma once

#include "disagg/harness/config.hpp"
#include "disagg/harness/experiment.hpp"
#include "disagg/harness/normality.hpp"
#include "disagg/harness/report.hpp"
