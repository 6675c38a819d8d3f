#pragma once

#include "greennas/robustness/conformal.hpp"
#include "greennas/robustness/horizon.hpp"
#include "greennas/robustness/importance.hpp"
