#pragma once

#include "momentmap/basis.hpp"
#include "momentmap/bifurcation.hpp"
#include "momentmap/continuation.hpp"
#include "momentmap/core.hpp"
#include "momentmap/critical_scan.hpp"
#include "momentmap/filter.hpp"
#include "momentmap/moment_map.hpp"
#include "momentmap/polyroots.hpp"
#include "momentmap/scenario.hpp"
