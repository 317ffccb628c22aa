#pragma once

// Umbrella header for the CORAL ordinal regression library.

#include "coral/data.hpp"
#include "coral/losses.hpp"
#include "coral/matrix.hpp"
#include "coral/metrics.hpp"
#include "coral/model.hpp"
#include "coral/model_io.hpp"
#include "coral/numeric.hpp"
#include "coral/optim.hpp"
#include "coral/ordinal.hpp"
#include "coral/records.hpp"
#include "coral/rng.hpp"
