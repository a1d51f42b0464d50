#pragma once

#include "screenmin/probmodel.hpp"
#include "screenmin/screening.hpp"
#include "screenmin/fwer_power.hpp"
#include "screenmin/thresholds.hpp"
#include "screenmin/testing.hpp"
#include "screenmin/simulation.hpp"
#include "screenmin/io.hpp"
