#pragma once

#include "setsim/components.hpp"
#include "setsim/csv.hpp"
#include "setsim/descriptors.hpp"
#include "setsim/error.hpp"
#include "setsim/experiment.hpp"
#include "setsim/image.hpp"
#include "setsim/image_io.hpp"
#include "setsim/models.hpp"
#include "setsim/ndist.hpp"
#include "setsim/parallel.hpp"
#include "setsim/permtest.hpp"
#include "setsim/rng.hpp"
