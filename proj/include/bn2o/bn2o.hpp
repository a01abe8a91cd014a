#pragma once

#include "bn2o/error.hpp"
#include "bn2o/generator.hpp"
#include "bn2o/inference.hpp"
#include "bn2o/json_io.hpp"
#include "bn2o/network.hpp"
#include "bn2o/reduction.hpp"
#include "bn2o/report.hpp"
#include "bn2o/similarity.hpp"
#include "bn2o/sweep.hpp"
