#pragma once

#include "scenebench/cli.hpp"
#include "scenebench/dataset.hpp"
#include "scenebench/ensemble.hpp"
#include "scenebench/errors.hpp"
#include "scenebench/metrics.hpp"
#include "scenebench/parsing.hpp"
#include "scenebench/predictions.hpp"
#include "scenebench/prompt.hpp"
#include "scenebench/providers.hpp"
#include "scenebench/report.hpp"
#include "scenebench/schema.hpp"
#include "scenebench/version.hpp"
