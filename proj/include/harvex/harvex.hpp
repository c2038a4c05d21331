#pragma once

// Umbrella header: spectral domain setup, closed-form harvest control,
// location-scatter risk engine, verification oracles, and scenario plumbing.

#include "harvex/control.hpp"
#include "harvex/errors.hpp"
#include "harvex/linalg.hpp"
#include "harvex/location_scatter.hpp"
#include "harvex/oracles.hpp"
#include "harvex/report.hpp"
#include "harvex/risk.hpp"
#include "harvex/run.hpp"
#include "harvex/scenario.hpp"
#include "harvex/spatial_domain.hpp"
