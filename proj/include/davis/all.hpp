// SPDX-License-Identifier: MIT
/// @file all.hpp
/// @brief Umbrella header for the library modules.
#pragma once

#include "davis/error.hpp"
#include "davis/utility.hpp"
#include "davis/numeric.hpp"
#include "davis/lp.hpp"
#include "davis/market.hpp"
#include "davis/optim.hpp"
#include "davis/superrep.hpp"
#include "davis/davis.hpp"
#include "davis/brownian.hpp"
