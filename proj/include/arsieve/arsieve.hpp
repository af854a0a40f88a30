#pragma once

#include "arsieve/bootstrap.hpp"
#include "arsieve/coverage.hpp"
#include "arsieve/error.hpp"
#include "arsieve/factor.hpp"
#include "arsieve/inference.hpp"
#include "arsieve/panel.hpp"
#include "arsieve/parallel.hpp"
#include "arsieve/report.hpp"
#include "arsieve/rng.hpp"
#include "arsieve/sim.hpp"
#include "arsieve/var_sieve.hpp"
