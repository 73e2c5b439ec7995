#pragma once

#include "posebank/augment.hpp"
#include "posebank/cluster.hpp"
#include "posebank/coco.hpp"
#include "posebank/dpp.hpp"
#include "posebank/errors.hpp"
#include "posebank/heatmap.hpp"
#include "posebank/image.hpp"
#include "posebank/inpaint.hpp"
#include "posebank/kernel.hpp"
#include "posebank/memory.hpp"
#include "posebank/metrics.hpp"
#include "posebank/pose.hpp"
#include "posebank/rng.hpp"
#include "posebank/schedule.hpp"
#include "posebank/tps.hpp"
