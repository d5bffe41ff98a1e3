#pragma once

#include "facetflow/config.hpp"
#include "facetflow/diagnostics.hpp"
#include "facetflow/grid.hpp"
#include "facetflow/linsolve.hpp"
#include "facetflow/model.hpp"
#include "facetflow/presets.hpp"
#include "facetflow/report.hpp"
#include "facetflow/runner.hpp"
#include "facetflow/scheme.hpp"
#include "facetflow/usolver.hpp"
#include "facetflow/vsolver.hpp"
