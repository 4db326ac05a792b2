#pragma once

#include "stochopt/conditional.hpp"
#include "stochopt/density.hpp"
#include "stochopt/ensemble.hpp"
#include "stochopt/errors.hpp"
#include "stochopt/io.hpp"
#include "stochopt/market.hpp"
#include "stochopt/martingale.hpp"
#include "stochopt/parallel.hpp"
#include "stochopt/pricing.hpp"
#include "stochopt/random.hpp"
#include "stochopt/simulate.hpp"
#include "stochopt/strategy.hpp"
