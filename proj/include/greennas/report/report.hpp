#pragma once

#include "greennas/report/bench.hpp"
#include "greennas/report/csv.hpp"
#include "greennas/report/manifest.hpp"
#include "greennas/report/reports.hpp"
#include "greennas/report/svg.hpp"
