#pragma once

#include "conelab/configurations.hpp"
#include "conelab/constructions.hpp"
#include "conelab/core.hpp"
#include "conelab/density.hpp"
#include "conelab/experiments.hpp"
#include "conelab/geometry.hpp"
#include "conelab/homogeneity.hpp"
#include "conelab/interval.hpp"
#include "conelab/measure.hpp"
#include "conelab/parallel.hpp"
#include "conelab/random.hpp"
#include "conelab/region.hpp"
