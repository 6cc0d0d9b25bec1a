#pragma once

#include "ber_focus.hpp"
#include "calibration.hpp"
#include "errors.hpp"
#include "experiment.hpp"
#include "np_focus.hpp"
#include "parallel.hpp"
#include "quantile_grid.hpp"
#include "random.hpp"
#include "reference_oracle.hpp"
#include "scenarios.hpp"
