#pragma once

// Umbrella header.

#include "constmoran/assoc_stats.hpp"
#include "constmoran/error.hpp"
#include "constmoran/field_synth.hpp"
#include "constmoran/io.hpp"
#include "constmoran/moran.hpp"
#include "constmoran/numeric.hpp"
#include "constmoran/parallel.hpp"
#include "constmoran/resampler.hpp"
#include "constmoran/rng.hpp"
#include "constmoran/significance.hpp"
#include "constmoran/spatial_weights.hpp"
