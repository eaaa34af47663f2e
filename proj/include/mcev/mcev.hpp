#pragma once

#include "mcev/errors.hpp"
#include "mcev/specialfn.hpp"
#include "mcev/model.hpp"
#include "mcev/policy.hpp"
#include "mcev/montecarlo.hpp"
#include "mcev/backtest.hpp"
#include "mcev/bench.hpp"
