#pragma once

#include "bench.hpp"
#include "errors.hpp"
#include "kernels.hpp"
#include "model_io.hpp"
#include "partition.hpp"
#include "point.hpp"
#include "points.hpp"
#include "pu.hpp"
#include "stablebasis.hpp"
