#pragma once

#include "trf/error.hpp"
#include "trf/tensorio.hpp"
#include "trf/preprocess.hpp"
#include "trf/lagged_design.hpp"
#include "trf/trf_model.hpp"
#include "trf/stats.hpp"
#include "trf/ridge.hpp"
#include "trf/lda.hpp"
#include "trf/synthgen.hpp"
#include "trf/pipeline.hpp"
