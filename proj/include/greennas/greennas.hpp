#pragma once

#include "greennas/baselines/baselines.hpp"
#include "greennas/baselines/metrics.hpp"
#include "greennas/dataset/container.hpp"
#include "greennas/dataset/split.hpp"
#include "greennas/ingest/cache.hpp"
#include "greennas/ingest/cities.hpp"
#include "greennas/ingest/open_meteo.hpp"
#include "greennas/ingest/synthetic.hpp"
#include "greennas/nas/evolve.hpp"
#include "greennas/nn/serialize.hpp"
#include "greennas/nn/train.hpp"
#include "greennas/report/report.hpp"
#include "greennas/robustness/robustness.hpp"
#include "greennas/transfer/transfer.hpp"
