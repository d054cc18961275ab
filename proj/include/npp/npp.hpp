#pragma once

#include "npp/approx.hpp"
#include "npp/core.hpp"
#include "npp/fitting.hpp"
#include "npp/grid.hpp"
#include "npp/io.hpp"
#include "npp/mcmc.hpp"
#include "npp/posterior.hpp"
#include "npp/prior.hpp"
#include "npp/quadrature.hpp"
#include "npp/random.hpp"
#include "npp/scenario.hpp"
#include "npp/transform.hpp"
