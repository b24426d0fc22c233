#pragma once

#include "fracvolt/closed_forms.hpp"
#include "fracvolt/config.hpp"
#include "fracvolt/covariance.hpp"
#include "fracvolt/csv_io.hpp"
#include "fracvolt/fbm.hpp"
#include "fracvolt/fraccalc.hpp"
#include "fracvolt/grid.hpp"
#include "fracvolt/mittag_leffler.hpp"
#include "fracvolt/quadrature.hpp"
#include "fracvolt/random.hpp"
#include "fracvolt/resolvent.hpp"
#include "fracvolt/spectral.hpp"
#include "fracvolt/stochconv.hpp"
#include "fracvolt/validation.hpp"
