#pragma once

// Umbrella header for the NorCal calibration toolkit.

#include "norcal/core.hpp"
#include "norcal/calib.hpp"
#include "norcal/eval.hpp"
#include "norcal/io.hpp"
#include "norcal/oracle.hpp"
#include "norcal/synth.hpp"
#include "norcal/tune.hpp"
