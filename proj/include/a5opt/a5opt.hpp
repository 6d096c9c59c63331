#pragma once

#include "a5opt/geom.hpp"
#include "a5opt/handover.hpp"
#include "a5opt/mobility.hpp"
#include "a5opt/optimizer.hpp"
#include "a5opt/report.hpp"
#include "a5opt/rng.hpp"
#include "a5opt/scenario.hpp"
#include "a5opt/sensitivity.hpp"
#include "a5opt/surrogate.hpp"
#include "a5opt/sweep.hpp"
#include "a5opt/version.hpp"
